use std::collections::HashMap;

use crate::environment::KnownEnvironment;
use crate::error::FpeError;
use crate::geometry::{Configuration, PotentialField};

/// Largest configuration dimension for which a full lattice is built.
pub const MAX_LATTICE_DIM: usize = 3;

/// Feasible grid nodes with axis adjacency and potential values.
#[derive(Debug, Clone)]
pub struct Lattice {
    spacing: f64,
    anchor: Vec<f64>,
    keys: Vec<Vec<i64>>,
    coords: Vec<Vec<f64>>,
    potential: Vec<f64>,
    adj: Vec<Vec<usize>>,
    index: HashMap<Vec<i64>, usize>,
    field: Option<PotentialField>,
}

impl Lattice {
    /// Grid of pitch `spacing` through `anchor`, restricted to feasible nodes
    /// of `env`; two nodes are adjacent when they differ by one step along an
    /// axis and the segment between them is feasible.
    pub fn from_environment(
        env: &KnownEnvironment,
        anchor: &Configuration,
        spacing: f64,
        pot: &PotentialField,
    ) -> Result<Self, FpeError> {
        let n = anchor.dim();
        if n > MAX_LATTICE_DIM {
            return Err(FpeError::DimensionTooLarge(n));
        }
        if !(spacing > 0.0) {
            return Err(FpeError::InvalidLattice(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let wdim = env.workspace_dim();
        if n == 0 || !n.is_multiple_of(wdim) {
            return Err(FpeError::InvalidLattice(format!(
                "configuration dimension {n} does not stack workspace dimension {wdim}"
            )));
        }
        let ws = env.truth().workspace();
        let a = anchor.coords();
        let ranges: Vec<(i64, i64)> = (0..n)
            .map(|i| {
                let (lo, hi) = (ws.min()[i % wdim], ws.max()[i % wdim]);
                (
                    ((lo - a[i]) / spacing - 1e-9).ceil() as i64,
                    ((hi - a[i]) / spacing + 1e-9).floor() as i64,
                )
            })
            .collect();
        let mut keys = Vec::new();
        let mut coords = Vec::new();
        let mut key: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().all(|r| r.0 <= r.1) {
            'grid: loop {
                let c: Vec<f64> = (0..n).map(|i| a[i] + spacing * key[i] as f64).collect();
                if env.point_feasible(&Configuration::new(c.clone())) {
                    keys.push(key.clone());
                    coords.push(c);
                }
                // odometer, last axis fastest
                for axis in (0..n).rev() {
                    if key[axis] < ranges[axis].1 {
                        key[axis] += 1;
                        continue 'grid;
                    }
                    key[axis] = ranges[axis].0;
                }
                break;
            }
        }
        let index: HashMap<Vec<i64>, usize> = keys
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        let mut adj = vec![Vec::new(); keys.len()];
        for j in 0..keys.len() {
            for axis in 0..n {
                let mut nk = keys[j].clone();
                nk[axis] += 1;
                if let Some(&k) = index.get(&nk) {
                    let (cj, ck) = (
                        Configuration::new(coords[j].clone()),
                        Configuration::new(coords[k].clone()),
                    );
                    if env.segment_feasible(&cj, &ck) {
                        adj[j].push(k);
                        adj[k].push(j);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let potential = coords.iter().map(|c| pot.at(c)).collect();
        Ok(Self {
            spacing,
            anchor: a.to_vec(),
            keys,
            coords,
            potential,
            adj,
            index,
            field: Some(pot.clone()),
        })
    }

    /// A lattice given only by potentials and undirected edges. Steepest
    /// descent then means the largest potential drop.
    pub fn from_graph(
        spacing: f64,
        potential: Vec<f64>,
        edges: &[(usize, usize)],
    ) -> Result<Self, FpeError> {
        if !(spacing > 0.0) {
            return Err(FpeError::InvalidLattice(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let m = potential.len();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in edges {
            if a >= m || b >= m || a == b {
                return Err(FpeError::InvalidLattice(format!("bad edge ({a}, {b})")));
            }
            if !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let keys: Vec<Vec<i64>> = (0..m as i64).map(|i| vec![i]).collect();
        let coords = (0..m).map(|i| vec![spacing * i as f64]).collect();
        let index = keys
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        Ok(Self {
            spacing,
            anchor: vec![0.0],
            keys,
            coords,
            potential,
            adj,
            index,
            field: None,
        })
    }

    /// Path graph `0 - 1 - ... - (m-1)`.
    pub fn chain(spacing: f64, potential: Vec<f64>) -> Result<Self, FpeError> {
        let edges: Vec<(usize, usize)> = (1..potential.len()).map(|i| (i - 1, i)).collect();
        Self::from_graph(spacing, potential, &edges)
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.adj[j]
    }

    pub fn coords(&self, j: usize) -> &[f64] {
        &self.coords[j]
    }

    pub fn key(&self, j: usize) -> &[i64] {
        &self.keys[j]
    }

    pub fn field(&self) -> Option<&PotentialField> {
        self.field.as_ref()
    }

    pub(crate) fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest potential difference across an edge.
    pub(crate) fn max_edge_drop(&self) -> f64 {
        (0..self.len())
            .flat_map(|j| {
                self.adj[j]
                    .iter()
                    .map(move |&k| (self.potential[j] - self.potential[k]).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Node located at `x`, if `x` sits on a lattice node (within 1e-6 steps).
    pub fn node_at(&self, x: &[f64]) -> Result<usize, FpeError> {
        if x.len() != self.dim() {
            return Err(FpeError::NotANode(x.to_vec()));
        }
        let mut key = Vec::with_capacity(x.len());
        for (xi, ai) in x.iter().zip(&self.anchor) {
            let z = (xi - ai) / self.spacing;
            let r = z.round();
            if (z - r).abs() > 1e-6 {
                return Err(FpeError::NotANode(x.to_vec()));
            }
            key.push(r as i64);
        }
        self.index
            .get(&key)
            .copied()
            .ok_or_else(|| FpeError::NotANode(x.to_vec()))
    }

    /// Is `j` a strict-or-flat local minimiser: no neighbour has lower potential?
    pub fn is_local_min(&self, j: usize) -> bool {
        self.adj[j]
            .iter()
            .all(|&k| self.potential[k] >= self.potential[j])
    }

    /// Gibbs density `exp(-p / beta) / K` normalised over the whole lattice.
    pub fn gibbs(&self, beta: f64) -> Vec<f64> {
        let pmin = self.potential.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self
            .potential
            .iter()
            .map(|p| (-(p - pmin) / beta).exp())
            .collect();
        let k: f64 = w.iter().sum();
        w.into_iter().map(|x| x / k).collect()
    }

    /// Steepest-descent neighbours of `j` among those with strictly lower potential.
    pub(crate) fn steepest(&self, j: usize) -> Vec<usize> {
        let pj = self.potential[j];
        let lower: Vec<usize> = self.adj[j]
            .iter()
            .copied()
            .filter(|&k| self.potential[k] < pj)
            .collect();
        if lower.is_empty() {
            return lower;
        }
        let scores: Vec<f64> = match &self.field {
            Some(field) => {
                let g = field.gradient(&self.coords[j]);
                lower
                    .iter()
                    .map(|&k| {
                        self.coords[j]
                            .iter()
                            .zip(&self.coords[k])
                            .zip(&g)
                            .map(|((a, b), gi)| (a - b) * gi)
                            .sum()
                    })
                    .collect()
            }
            None => lower.iter().map(|&k| pj - self.potential[k]).collect(),
        };
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * best.abs().max(self.spacing);
        lower
            .into_iter()
            .zip(scores)
            .filter(|&(_, s)| s >= best - tol)
            .map(|(k, _)| k)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::GroundTruth;
    use crate::geometry::{Aabb, ObstaclePrimitive};
    use std::sync::Arc;

    fn env(prims: Vec<ObstaclePrimitive>) -> KnownEnvironment {
        let ws = Aabb::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        KnownEnvironment::fully_known(Arc::new(GroundTruth::new(ws, prims).unwrap()))
    }

    #[test]
    fn grid_counts_and_adjacency() {
        let pot = PotentialField::new(Configuration::new(vec![0.5, 0.5]));
        let lat = Lattice::from_environment(
            &env(vec![]),
            &Configuration::new(vec![0.0, 0.0]),
            0.25,
            &pot,
        )
        .unwrap();
        assert_eq!(lat.len(), 25);
        // interior edges of a 5x5 grid: 2 * 5 * 4
        let edges: usize = (0..lat.len())
            .map(|j| lat.neighbors(j).len())
            .sum::<usize>()
            / 2;
        assert_eq!(edges, 40);
        for j in 0..lat.len() {
            for &k in lat.neighbors(j) {
                let d: f64 = lat
                    .coords(j)
                    .iter()
                    .zip(lat.coords(k))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!((d - 0.25).abs() < 1e-12);
            }
        }
        let centre = lat.node_at(&[0.5, 0.5]).unwrap();
        assert_eq!(lat.potential()[centre], 0.0);
        assert!(lat.is_local_min(centre));
        assert!(lat.node_at(&[0.1, 0.5]).is_err());
    }

    #[test]
    fn obstacles_remove_nodes_and_edges() {
        let wall = ObstaclePrimitive::boxed(vec![0.3, 0.0], vec![0.45, 0.8], true).unwrap();
        let pot = PotentialField::new(Configuration::new(vec![1.0, 0.0]));
        let lat = Lattice::from_environment(
            &env(vec![wall]),
            &Configuration::new(vec![0.0, 0.0]),
            0.25,
            &pot,
        )
        .unwrap();
        // nodes (0.25, y) and (0.5, y) survive but no edge crosses the wall below 0.8
        let a = lat.node_at(&[0.25, 0.5]).unwrap();
        let b = lat.node_at(&[0.5, 0.5]).unwrap();
        assert!(!lat.neighbors(a).contains(&b));
        let a = lat.node_at(&[0.25, 1.0]).unwrap();
        let b = lat.node_at(&[0.5, 1.0]).unwrap();
        assert!(lat.neighbors(a).contains(&b));
    }

    #[test]
    fn refuses_high_dimension() {
        let ws = Aabb::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let e = KnownEnvironment::fully_known(Arc::new(GroundTruth::new(ws, vec![]).unwrap()));
        let pot = PotentialField::new(Configuration::new(vec![0.5; 4]));
        let err = Lattice::from_environment(&e, &Configuration::new(vec![0.0; 4]), 0.1, &pot)
            .unwrap_err();
        assert_eq!(err, FpeError::DimensionTooLarge(4));
    }

    #[test]
    fn steepest_descent_edges() {
        // target at (1, 0.25) from (0, 0): x offset dominates
        let pot = PotentialField::new(Configuration::new(vec![1.0, 0.25]));
        let lat = Lattice::from_environment(
            &env(vec![]),
            &Configuration::new(vec![0.0, 0.0]),
            0.25,
            &pot,
        )
        .unwrap();
        let j = lat.node_at(&[0.0, 0.0]).unwrap();
        assert_eq!(lat.steepest(j), vec![lat.node_at(&[0.25, 0.0]).unwrap()]);
        // diagonal tie: both axis moves descend equally
        let pot = PotentialField::new(Configuration::new(vec![1.0, 1.0]));
        let lat = Lattice::from_environment(
            &env(vec![]),
            &Configuration::new(vec![0.0, 0.0]),
            0.25,
            &pot,
        )
        .unwrap();
        let j = lat.node_at(&[0.0, 0.0]).unwrap();
        assert_eq!(lat.steepest(j).len(), 2);
        let chain = Lattice::chain(1.0, vec![3.0, 0.0, 2.0]).unwrap();
        assert_eq!(chain.steepest(2), vec![1]);
        assert_eq!(chain.steepest(0), vec![1]);
        assert!(chain.steepest(1).is_empty());
    }
}
