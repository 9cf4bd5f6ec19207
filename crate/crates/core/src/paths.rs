//! Root-to-target path extraction.
//!
//! The generated graph is a tree, so ancestor back-tracing is the primary
//! extractor. Breadth-first search and Dijkstra are kept as independent
//! cross-checks; all three must agree on every generated graph.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use ordered_float::OrderedFloat;

use crate::error::PathError;
use crate::geometry::{euclid, Configuration};
use crate::graph::{SearchGraph, VertexId};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPath {
    pub vertices: Vec<VertexId>,
    pub length: f64,
    pub hops: usize,
}

impl GraphPath {
    fn from_ids(g: &SearchGraph, vertices: Vec<VertexId>) -> Self {
        let length = vertices
            .windows(2)
            .map(|w| {
                euclid(
                    g.vertex(w[0]).config.coords(),
                    g.vertex(w[1]).config.coords(),
                )
            })
            .sum();
        let hops = vertices.len().saturating_sub(1);
        Self {
            vertices,
            length,
            hops,
        }
    }

    /// Configurations along the path.
    pub fn configs(&self, g: &SearchGraph) -> Vec<Configuration> {
        self.vertices
            .iter()
            .map(|&v| g.vertex(v).config.clone())
            .collect()
    }
}

fn target_of(g: &SearchGraph) -> Result<VertexId, PathError> {
    g.target().ok_or(PathError::TargetAbsent)
}

/// Undirected adjacency lists of the tree.
fn adjacency(g: &SearchGraph) -> Vec<Vec<VertexId>> {
    let mut adj = vec![Vec::new(); g.len()];
    for (child, parent) in g.edges() {
        adj[child].push(parent);
        adj[parent].push(child);
    }
    adj
}

/// Follow ancestor links from the target back to the root.
pub fn backtrace(g: &SearchGraph) -> Result<GraphPath, PathError> {
    let mut v = target_of(g)?;
    let mut ids = vec![v];
    while let Some(a) = g.vertex(v).ancestor {
        ids.push(a);
        v = a;
    }
    ids.reverse();
    Ok(GraphPath::from_ids(g, ids))
}

/// Minimum-hop path under unit edge weights.
pub fn bfs_path(g: &SearchGraph) -> Result<GraphPath, PathError> {
    let target = target_of(g)?;
    let adj = adjacency(g);
    let mut prev = vec![usize::MAX; g.len()];
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::from([g.root()]);
    seen[g.root()] = true;
    while let Some(u) = queue.pop_front() {
        if u == target {
            break;
        }
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    Ok(GraphPath::from_ids(g, unwind(&prev, g.root(), target)))
}

/// Minimum Euclidean-length path.
pub fn dijkstra_path(g: &SearchGraph) -> Result<GraphPath, PathError> {
    let target = target_of(g)?;
    let adj = adjacency(g);
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut prev = vec![usize::MAX; g.len()];
    let mut heap = BinaryHeap::new();
    dist[g.root()] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), g.root())));
    while let Some(Reverse((OrderedFloat(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == target {
            break;
        }
        for &w in &adj[u] {
            let nd = d + euclid(g.vertex(u).config.coords(), g.vertex(w).config.coords());
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = u;
                heap.push(Reverse((OrderedFloat(nd), w)));
            }
        }
    }
    Ok(GraphPath::from_ids(g, unwind(&prev, g.root(), target)))
}

fn unwind(prev: &[usize], root: VertexId, target: VertexId) -> Vec<VertexId> {
    let mut ids = vec![target];
    let mut v = target;
    while v != root {
        v = prev[v];
        ids.push(v);
    }
    ids.reverse();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{GroundTruth, KnownEnvironment};
    use crate::escape::TrapEscapePolicy;
    use crate::geometry::{Aabb, ObstaclePrimitive, PotentialField};
    use crate::graph::{generate_graph, GenConfig};
    use std::sync::Arc;

    fn env(prims: Vec<ObstaclePrimitive>) -> KnownEnvironment {
        let ws = Aabb::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        KnownEnvironment::fully_known(Arc::new(GroundTruth::new(ws, prims).unwrap()))
    }

    fn graph(start: &[f64], target: &[f64], prims: Vec<ObstaclePrimitive>) -> SearchGraph {
        let e = env(prims);
        let pot = PotentialField::new(Configuration::new(target.to_vec()));
        generate_graph(
            &Configuration::new(start.to_vec()),
            &e,
            &GenConfig::new(0.03),
            &pot,
            &TrapEscapePolicy::none(),
        )
        .unwrap()
        .into_graph()
    }

    #[test]
    fn axis_walk_backtrace() {
        let g = graph(&[0.5, 0.5], &[0.59, 0.5], vec![]);
        let p = backtrace(&g).unwrap();
        assert_eq!(p.hops, 4);
        assert_eq!(p.vertices.first(), Some(&g.root()));
        assert_eq!(p.vertices.last(), g.target().as_ref());
        // three lattice steps plus a zero-length link onto the target
        assert!((p.length - 0.09).abs() < 1e-12);
        assert_eq!(bfs_path(&g).unwrap(), p);
        assert_eq!(dijkstra_path(&g).unwrap(), p);
    }

    #[test]
    fn one_hop_link() {
        let g = graph(&[0.5, 0.5], &[0.52, 0.5], vec![]);
        let p = backtrace(&g).unwrap();
        // root expanded once, then the +x child links the target
        assert_eq!(p.hops, 2);
        let g = graph(&[0.5, 0.5], &[0.5, 0.5], vec![]);
        assert_eq!(backtrace(&g).unwrap().vertices, vec![0]);
    }

    #[test]
    fn length_sums_edges() {
        let wall = ObstaclePrimitive::boxed(vec![0.45, 0.3], vec![0.5, 0.7], true).unwrap();
        let g = graph(&[0.3, 0.5], &[0.71, 0.52], vec![wall]);
        let p = backtrace(&g).unwrap();
        let last = g.vertex(p.vertices[p.hops - 1]).config.coords().to_vec();
        let link = euclid(&last, &[0.71, 0.52]);
        assert!((p.length - ((p.hops - 1) as f64 * 0.03 + link)).abs() < 1e-9);
        assert_eq!(bfs_path(&g).unwrap().vertices, p.vertices);
        assert_eq!(dijkstra_path(&g).unwrap().vertices, p.vertices);
    }

    #[test]
    fn missing_target() {
        let ring = vec![
            ObstaclePrimitive::boxed(vec![0.8, 0.8], vec![0.9, 0.82], true).unwrap(),
            ObstaclePrimitive::boxed(vec![0.8, 0.88], vec![0.9, 0.9], true).unwrap(),
            ObstaclePrimitive::boxed(vec![0.8, 0.8], vec![0.82, 0.9], true).unwrap(),
            ObstaclePrimitive::boxed(vec![0.88, 0.8], vec![0.9, 0.9], true).unwrap(),
        ];
        let g = graph(&[0.5, 0.5], &[0.85, 0.85], ring);
        assert_eq!(backtrace(&g), Err(PathError::TargetAbsent));
        assert_eq!(bfs_path(&g), Err(PathError::TargetAbsent));
        assert_eq!(dijkstra_path(&g), Err(PathError::TargetAbsent));
    }
}
