//! Potential-guided lattice tree growth.
//!
//! Starting from the current configuration, the vertex of lowest potential
//! among the unexpanded ones is repeatedly expanded along `±l` times every
//! basis vector. Candidates that violate the known environment, whose edge
//! violates it, or that already exist on the lattice are dropped. Growth
//! stops as soon as a new vertex can see the target within the connection
//! radius, or reports an empty result once no vertex can add anything.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use ordered_float::OrderedFloat;

use crate::environment::KnownEnvironment;
use crate::error::GraphError;
use crate::escape::{self, EscapeEvent, TrapEscapePolicy};
use crate::geometry::{euclid, Configuration, PotentialField};

pub type VertexId = usize;

/// Integer coordinates of a vertex on the lattice `anchor + l * z` (in basis N).
pub type LatticeKey = Vec<i64>;

/// A lattice move: sparse integer offset applied to a key.
pub(crate) type Move = Vec<(usize, i64)>;

/// How a vertex entered the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Root,
    Expansion,
    /// Added during a near-obstacle escape with the given proximity bound.
    NearObstacle {
        epsilon: f64,
    },
    /// Added during a fixed-shape escape; the robot pairs whose offsets were
    /// held fixed at insertion time.
    FixedShape {
        fixed_pairs: Vec<(usize, usize)>,
    },
    Target,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub config: Configuration,
    pub potential: f64,
    pub ancestor: Option<VertexId>,
    pub expanded: bool,
    pub key: Option<LatticeKey>,
    pub origin: Origin,
}

/// Knobs for graph generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Lattice pitch `l`.
    pub step: f64,
    /// Radius within which a new vertex links straight to the target.
    pub connect_radius: f64,
    pub max_vertices: usize,
    /// Orthonormal basis; `None` means the standard axes.
    pub basis: Option<Vec<Vec<f64>>>,
}

impl GenConfig {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            connect_radius: step,
            max_vertices: 2_000_000,
            basis: None,
        }
    }

    pub fn with_connect_radius(mut self, r: f64) -> Self {
        self.connect_radius = r;
        self
    }

    pub fn with_max_vertices(mut self, n: usize) -> Self {
        self.max_vertices = n;
        self
    }

    pub fn with_basis(mut self, basis: Vec<Vec<f64>>) -> Self {
        self.basis = Some(basis);
        self
    }

    fn validate(&self) -> Result<(), GraphError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(GraphError::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.connect_radius > 0.0) {
            return Err(GraphError::InvalidConfig(format!(
                "connect_radius must be positive, got {}",
                self.connect_radius
            )));
        }
        if self.max_vertices < 1 {
            return Err(GraphError::InvalidConfig(
                "max_vertices must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn resolve_basis(&self, n: usize) -> Result<Vec<Vec<f64>>, GraphError> {
        match &self.basis {
            None => Ok((0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()),
            Some(b) => {
                if b.len() != n || b.iter().any(|e| e.len() != n) {
                    return Err(GraphError::InvalidConfig(format!(
                        "basis must hold {n} vectors of length {n}"
                    )));
                }
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (dot - want).abs() > 1e-9 {
                            return Err(GraphError::InvalidConfig(
                                "basis is not orthonormal".into(),
                            ));
                        }
                    }
                }
                Ok(b.clone())
            }
        }
    }
}

/// Per-graph counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphStats {
    pub expansions: usize,
    /// Local-minimum events: expansions that produced no lower-potential
    /// vertex, plus escape activations.
    pub local_minima: usize,
    pub escapes: Vec<EscapeEvent>,
    /// Ordinary expansions in order, each with the vertex count at that moment.
    pub expansion_log: Vec<(VertexId, usize)>,
}

/// Rooted lattice tree.
#[derive(Debug, Clone)]
pub struct SearchGraph {
    vertices: Vec<Vertex>,
    keys: HashMap<LatticeKey, VertexId>,
    anchor: Configuration,
    step: f64,
    basis: Vec<Vec<f64>>,
    standard_basis: bool,
    target_config: Configuration,
    target: Option<VertexId>,
    stats: GraphStats,
}

impl SearchGraph {
    fn new(
        anchor: Configuration,
        step: f64,
        basis: Vec<Vec<f64>>,
        target_config: Configuration,
    ) -> Self {
        let n = anchor.dim();
        let standard_basis = basis
            .iter()
            .enumerate()
            .all(|(i, e)| (0..n).all(|j| e[j] == if i == j { 1.0 } else { 0.0 }));
        Self {
            vertices: Vec::new(),
            keys: HashMap::new(),
            anchor,
            step,
            basis,
            standard_basis,
            target_config,
            target: None,
            stats: GraphStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn target(&self) -> Option<VertexId> {
        self.target
    }

    pub fn target_config(&self) -> &Configuration {
        &self.target_config
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn anchor(&self) -> &Configuration {
        &self.anchor
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// Edges as `(child, ancestor)` pairs in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.ancestor.map(|a| (i, a)))
    }

    pub fn contains_key(&self, key: &LatticeKey) -> bool {
        self.keys.contains_key(key)
    }

    pub fn vertex_by_key(&self, key: &LatticeKey) -> Option<VertexId> {
        self.keys.get(key).copied()
    }

    /// Rounds `(x - anchor) / l` in the graph's basis.
    pub fn lattice_key(&self, x: &Configuration) -> Result<LatticeKey, GraphError> {
        lattice_key(x, &self.anchor, self.step, &self.basis)
    }

    pub(crate) fn coords_of(&self, key: &[i64]) -> Configuration {
        let n = self.dim();
        let mut c = self.anchor.coords().to_vec();
        if self.standard_basis {
            for i in 0..n {
                c[i] += self.step * key[i] as f64;
            }
        } else {
            for (z, e) in key.iter().zip(&self.basis) {
                if *z != 0 {
                    for j in 0..n {
                        c[j] += self.step * *z as f64 * e[j];
                    }
                }
            }
        }
        Configuration::new(c)
    }

    /// Line-oriented dump: `id ancestor_id potential coord...`, ancestor `-1`
    /// for the root.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, v) in self.vertices.iter().enumerate() {
            let anc = v.ancestor.map(|a| a as i64).unwrap_or(-1);
            let _ = write!(out, "{id} {anc} {}", v.potential);
            for c in v.config.coords() {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Lattice key of `x` relative to `anchor` with pitch `step` in `basis`.
pub fn lattice_key(
    x: &Configuration,
    anchor: &Configuration,
    step: f64,
    basis: &[Vec<f64>],
) -> Result<LatticeKey, GraphError> {
    if x.dim() != anchor.dim() {
        return Err(crate::error::GeometryError::DimensionMismatch {
            expected: anchor.dim(),
            actual: x.dim(),
        }
        .into());
    }
    let diff: Vec<f64> = x
        .coords()
        .iter()
        .zip(anchor.coords())
        .map(|(a, b)| a - b)
        .collect();
    basis
        .iter()
        .enumerate()
        .map(|(axis, e)| {
            let z = diff.iter().zip(e).map(|(d, ei)| d * ei).sum::<f64>() / step;
            let r = z.round();
            if (z - r).abs() > 0.25 {
                Err(GraphError::LatticeConsistency {
                    axis,
                    offset: z - r,
                })
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

/// Result of [`generate_graph`].
#[derive(Debug, Clone)]
pub enum GraphResult {
    /// The tree reaches the target.
    Connected(SearchGraph),
    /// Every vertex is expanded and nothing more can be added.
    Empty(SearchGraph),
}

impl GraphResult {
    pub fn graph(&self) -> &SearchGraph {
        match self {
            GraphResult::Connected(g) | GraphResult::Empty(g) => g,
        }
    }

    pub fn into_graph(self) -> SearchGraph {
        match self {
            GraphResult::Connected(g) | GraphResult::Empty(g) => g,
        }
    }

    pub fn is_connected(&self) -> bool {
        matches!(self, GraphResult::Connected(_))
    }
}

/// Mutable state of one generation run, shared with the escape episodes.
pub(crate) struct Grower<'a> {
    pub(crate) graph: SearchGraph,
    heap: BinaryHeap<Reverse<(OrderedFloat<f64>, VertexId)>>,
    pub(crate) env: &'a KnownEnvironment,
    pub(crate) cfg: &'a GenConfig,
    pub(crate) pot: &'a PotentialField,
    /// Vertices marked expanded by restricted expansion; restorable.
    burned: Vec<VertexId>,
    /// Unexpanded vertices set aside after an escape; restored when the heap runs dry.
    deferred: Vec<bool>,
    deferred_count: usize,
    /// Escape-set vertex found by the last successful episode.
    pub(crate) escape_vertex: Option<VertexId>,
}

impl<'a> Grower<'a> {
    pub(crate) fn wrap(
        graph: SearchGraph,
        env: &'a KnownEnvironment,
        cfg: &'a GenConfig,
        pot: &'a PotentialField,
    ) -> Self {
        Self {
            graph,
            heap: BinaryHeap::new(),
            env,
            cfg,
            pot,
            burned: Vec::new(),
            deferred: Vec::new(),
            deferred_count: 0,
            escape_vertex: None,
        }
    }

    pub(crate) fn new(
        start: &Configuration,
        env: &'a KnownEnvironment,
        cfg: &'a GenConfig,
        pot: &'a PotentialField,
    ) -> Result<Self, GraphError> {
        let basis = cfg.resolve_basis(start.dim())?;
        let mut graph = SearchGraph::new(start.clone(), cfg.step, basis, pot.target().clone());
        let key = vec![0; start.dim()];
        graph.keys.insert(key.clone(), 0);
        graph.vertices.push(Vertex {
            config: start.clone(),
            potential: pot.at(start.coords()),
            ancestor: None,
            expanded: false,
            key: Some(key),
            origin: Origin::Root,
        });
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrderedFloat(graph.vertices[0].potential), 0)));
        Ok(Self {
            graph,
            heap,
            env,
            cfg,
            pot,
            burned: Vec::new(),
            deferred: Vec::new(),
            deferred_count: 0,
            escape_vertex: None,
        })
    }

    pub(crate) fn step(&self) -> f64 {
        self.cfg.step
    }

    pub(crate) fn potential(&self, id: VertexId) -> f64 {
        self.graph.vertices[id].potential
    }

    /// Single-basis-vector moves in candidate order `+e_0, -e_0, +e_1, ...`.
    pub(crate) fn axis_moves(&self) -> Vec<Move> {
        (0..self.graph.dim())
            .flat_map(|i| [vec![(i, 1)], vec![(i, -1)]])
            .collect()
    }

    pub(crate) fn candidate(&self, from: VertexId, mv: &Move) -> (LatticeKey, Configuration) {
        let mut key = self.graph.vertices[from]
            .key
            .clone()
            .expect("lattice vertex");
        for &(axis, dz) in mv {
            key[axis] += dz;
        }
        let config = self.graph.coords_of(&key);
        (key, config)
    }

    /// Is the candidate unvisited, feasible, and reachable by a feasible edge?
    pub(crate) fn admissible(
        &self,
        from: VertexId,
        key: &LatticeKey,
        config: &Configuration,
    ) -> bool {
        !self.graph.keys.contains_key(key)
            && self.env.point_feasible(config)
            && self
                .env
                .segment_feasible(&self.graph.vertices[from].config, config)
    }

    pub(crate) fn insert(
        &mut self,
        from: VertexId,
        key: LatticeKey,
        config: Configuration,
        origin: Origin,
    ) -> Result<VertexId, GraphError> {
        let id = self.graph.vertices.len();
        let potential = self.pot.at(config.coords());
        self.graph.keys.insert(key.clone(), id);
        self.graph.vertices.push(Vertex {
            config,
            potential,
            ancestor: Some(from),
            expanded: false,
            key: Some(key),
            origin,
        });
        self.heap.push(Reverse((OrderedFloat(potential), id)));
        if self.graph.vertices.len() > self.cfg.max_vertices {
            return Err(GraphError::VertexLimit {
                limit: self.cfg.max_vertices,
            });
        }
        Ok(id)
    }

    /// Link the target to the first of `fresh` that sees it within the
    /// connection radius. Returns whether the target is now in the graph.
    pub(crate) fn try_link_target(&mut self, fresh: &[VertexId]) -> Result<bool, GraphError> {
        if self.graph.target.is_some() {
            return Ok(true);
        }
        let target = self.graph.target_config.clone();
        // Open ball: a vertex exactly one connection radius away does not link.
        let radius = self.cfg.connect_radius * (1.0 - 1e-9);
        for &q in fresh {
            let qc = &self.graph.vertices[q].config;
            if euclid(qc.coords(), target.coords()) < radius
                && self.env.segment_feasible(qc, &target)
            {
                let id = self.graph.vertices.len();
                self.graph.vertices.push(Vertex {
                    config: target,
                    potential: 0.0,
                    ancestor: Some(q),
                    expanded: false,
                    key: None,
                    origin: Origin::Target,
                });
                self.graph.target = Some(id);
                if self.graph.vertices.len() > self.cfg.max_vertices {
                    return Err(GraphError::VertexLimit {
                        limit: self.cfg.max_vertices,
                    });
                }
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn pop_unexpanded(&mut self) -> Option<VertexId> {
        while let Some(Reverse((_, id))) = self.heap.pop() {
            let v = &self.graph.vertices[id];
            if !v.expanded
                && v.origin != Origin::Target
                && !self.deferred.get(id).copied().unwrap_or(false)
            {
                return Some(id);
            }
        }
        None
    }

    pub(crate) fn mark_burned(&mut self, id: VertexId) {
        if !self.graph.vertices[id].expanded {
            self.graph.vertices[id].expanded = true;
            self.burned.push(id);
        }
    }

    pub(crate) fn burned_len(&self) -> usize {
        self.burned.len()
    }

    /// Return vertices burned since `mark` to the unexpanded pool.
    pub(crate) fn restore_burned_since(&mut self, mark: usize) {
        for id in self.burned.drain(mark..) {
            self.graph.vertices[id].expanded = false;
            self.heap.push(Reverse((
                OrderedFloat(self.graph.vertices[id].potential),
                id,
            )));
        }
    }

    /// Set aside every unexpanded vertex whose potential is below `p(x)`.
    fn defer_below(&mut self, x: VertexId) {
        let px = self.potential(x);
        self.deferred.resize(self.graph.vertices.len(), false);
        for (id, v) in self.graph.vertices.iter().enumerate() {
            if id != x && !v.expanded && v.key.is_some() && v.potential < px && !self.deferred[id] {
                self.deferred[id] = true;
                self.deferred_count += 1;
            }
        }
    }

    fn restore_deferred(&mut self) {
        for id in 0..self.deferred.len() {
            if std::mem::take(&mut self.deferred[id]) {
                self.requeue(id);
            }
        }
        self.deferred_count = 0;
    }

    pub(crate) fn requeue(&mut self, id: VertexId) {
        self.heap.push(Reverse((
            OrderedFloat(self.graph.vertices[id].potential),
            id,
        )));
    }

    /// Full expansion of `v`: every admissible axis candidate is inserted.
    pub(crate) fn expand(&mut self, v: VertexId) -> Result<Vec<VertexId>, GraphError> {
        let present = self.graph.len();
        self.graph.stats.expansion_log.push((v, present));
        let mut fresh = Vec::new();
        for mv in self.axis_moves() {
            let (key, config) = self.candidate(v, &mv);
            if self.admissible(v, &key, &config) {
                fresh.push(self.insert(v, key, config, Origin::Expansion)?);
            }
        }
        self.graph.vertices[v].expanded = true;
        self.graph.stats.expansions += 1;
        let pv = self.potential(v);
        if !fresh.iter().any(|&q| self.potential(q) < pv) {
            self.graph.stats.local_minima += 1;
        }
        Ok(fresh)
    }

    pub(crate) fn record_escape(&mut self, event: EscapeEvent) {
        self.graph.stats.escapes.push(event);
    }
}

/// Expand vertex `v` of `g` against `env` (the bare candidate step).
pub fn expand_vertex(
    g: &mut SearchGraph,
    v: VertexId,
    env: &KnownEnvironment,
    cfg: &GenConfig,
) -> Result<Vec<VertexId>, GraphError> {
    let pot = PotentialField::new(g.target_config.clone());
    let graph = std::mem::replace(
        g,
        SearchGraph::new(
            Configuration::default(),
            1.0,
            vec![],
            Configuration::default(),
        ),
    );
    let mut grower = Grower::wrap(graph, env, cfg, &pot);
    let result = grower.expand(v);
    *g = grower.graph;
    result
}

/// Grow a lattice tree from `start` toward the potential's target.
pub fn generate_graph(
    start: &Configuration,
    env: &KnownEnvironment,
    cfg: &GenConfig,
    pot: &PotentialField,
    policy: &TrapEscapePolicy,
) -> Result<GraphResult, GraphError> {
    cfg.validate()?;
    let target = pot.target();
    if start.dim() != target.dim() {
        return Err(crate::error::GeometryError::DimensionMismatch {
            expected: start.dim(),
            actual: target.dim(),
        }
        .into());
    }
    policy.validate(start.dim(), env.workspace_dim())?;
    if !env.point_feasible(start) {
        return Err(GraphError::InfeasibleStart);
    }
    let mut grower = Grower::new(start, env, cfg, pot)?;
    if euclid(start.coords(), target.coords()) <= 1e-12 {
        grower.graph.target = Some(0);
        return Ok(GraphResult::Connected(grower.graph));
    }
    let mut activated = vec![false; 0];
    loop {
        if grower.graph.target.is_some() {
            return Ok(GraphResult::Connected(grower.graph));
        }
        let Some(v) = grower.pop_unexpanded() else {
            if grower.burned_len() > 0 || grower.deferred_count > 0 {
                grower.restore_burned_since(0);
                grower.restore_deferred();
                continue;
            }
            return Ok(GraphResult::Empty(grower.graph));
        };
        if policy.is_active() {
            if activated.len() < grower.graph.len() {
                activated.resize(grower.graph.len(), false);
            }
            if !activated[v] && escape::detect_local_min_in(&grower, v) {
                activated[v] = true;
                grower.graph.stats.local_minima += 1;
                grower.escape_vertex = None;
                escape::run_episode(&mut grower, v, policy)?;
                if let Some(x) = grower.escape_vertex {
                    if grower.graph.target.is_none() {
                        grower.defer_below(x);
                    }
                }
                if !grower.graph.vertices[v].expanded {
                    grower.requeue(v);
                }
                continue;
            }
        }
        let fresh = grower.expand(v)?;
        grower.try_link_target(&fresh)?;
    }
}
