//! Trap detection and the two dimension-reduction escape strategies.
//!
//! An escape episode starts at a lattice vertex from which no lower-potential
//! vertex can be generated. While it runs, expansion is restricted either to
//! configurations close to the known constraints or to rigid translations of
//! robot clusters. The episode ends as soon as a generated vertex lies in the
//! escape set, or falls back to ordinary expansion when the restricted search
//! runs dry.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::environment::KnownEnvironment;
use crate::error::GraphError;
use crate::geometry::{euclid, Configuration, PotentialField};
use crate::graph::{GenConfig, Grower, Move, Origin, SearchGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EscapeMode {
    None,
    NearObstacle,
    FixedShape,
}

impl EscapeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EscapeMode::None => "none",
            EscapeMode::NearObstacle => "near-obstacle",
            EscapeMode::FixedShape => "fixed-shape",
        }
    }
}

impl std::str::FromStr for EscapeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(EscapeMode::None),
            "near-obstacle" => Ok(EscapeMode::NearObstacle),
            "fixed-shape" => Ok(EscapeMode::FixedShape),
            other => Err(format!("unknown escape mode `{other}`")),
        }
    }
}

/// Order in which fixed pairwise offsets are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelaxOrder {
    #[default]
    MostRecentFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapEscapePolicy {
    pub mode: EscapeMode,
    /// Lower bound on the proximity threshold. `None` uses `sqrt(wdim) * l`.
    pub epsilon_floor: Option<f64>,
    /// Robot pairs whose offsets are held fixed, in the order they were added.
    /// `None` chains consecutive robots `(0,1), (1,2), ...`.
    pub shape_constraints: Option<Vec<(usize, usize)>>,
    pub relax_order: RelaxOrder,
}

impl TrapEscapePolicy {
    pub fn new(mode: EscapeMode) -> Self {
        Self {
            mode,
            epsilon_floor: None,
            shape_constraints: None,
            relax_order: RelaxOrder::MostRecentFirst,
        }
    }

    pub fn none() -> Self {
        Self::new(EscapeMode::None)
    }

    pub fn near_obstacle() -> Self {
        Self::new(EscapeMode::NearObstacle)
    }

    pub fn fixed_shape() -> Self {
        Self::new(EscapeMode::FixedShape)
    }

    pub fn with_epsilon_floor(mut self, floor: f64) -> Self {
        self.epsilon_floor = Some(floor);
        self
    }

    pub fn with_shape_constraints(mut self, pairs: Vec<(usize, usize)>) -> Self {
        self.shape_constraints = Some(pairs);
        self
    }

    pub fn is_active(&self) -> bool {
        self.mode != EscapeMode::None
    }

    pub(crate) fn validate(&self, n: usize, wdim: usize) -> Result<(), GraphError> {
        if self.mode != EscapeMode::FixedShape {
            return Ok(());
        }
        if wdim == 0 || !n.is_multiple_of(wdim) {
            return Err(crate::error::GeometryError::NotStacked {
                config_dim: n,
                workspace_dim: wdim,
            }
            .into());
        }
        let k = n / wdim;
        if k < 2 {
            return Err(GraphError::FixedShapeSingleRobot);
        }
        if let Some(pairs) = &self.shape_constraints {
            if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= k || b >= k || a == b) {
                return Err(GraphError::InvalidConfig(format!(
                    "bad shape constraint ({a}, {b}) for {k} robots"
                )));
            }
        }
        Ok(())
    }

    fn constraints(&self, robots: usize) -> Vec<(usize, usize)> {
        self.shape_constraints
            .clone()
            .unwrap_or_else(|| (1..robots).map(|i| (i - 1, i)).collect())
    }
}

impl Default for TrapEscapePolicy {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeOutcome {
    /// A vertex in the escape set (or the target) was generated.
    Escaped,
    /// The restricted search ran dry; ordinary expansion takes over.
    Fallback,
}

/// Log record of one escape episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeEvent {
    pub activation_vertex: VertexId,
    pub mode: EscapeMode,
    pub vertices_added: usize,
    pub relaxations: usize,
    pub outcome: EscapeOutcome,
    /// Proximity bound used in near-obstacle mode.
    pub epsilon: Option<f64>,
}

/// Membership test for the escape set around `y`: `x` is close to `y`, and
/// some move from `x` reaches an unvisited, feasible, lower-potential point.
#[derive(Debug, Clone)]
pub struct EscapeSet {
    pub y: Configuration,
    pub radius: f64,
}

impl EscapeSet {
    pub fn around(y: Configuration, step: f64) -> Self {
        Self {
            y,
            radius: std::f64::consts::SQRT_2 * step,
        }
    }

    pub(crate) fn contains(&self, grower: &Grower<'_>, x: VertexId, moves: &[Move]) -> bool {
        let xc = &grower.graph.vertex(x).config;
        if euclid(xc.coords(), self.y.coords()) > self.radius * (1.0 + 1e-9) {
            return false;
        }
        has_descent(grower, x, moves)
    }
}

fn has_descent(grower: &Grower<'_>, x: VertexId, moves: &[Move]) -> bool {
    let px = grower.potential(x);
    moves.iter().any(|mv| {
        let (key, cand) = grower.candidate(x, mv);
        grower.pot.at(cand.coords()) < px && grower.admissible(x, &key, &cand)
    })
}

/// Does every feasible unvisited neighbour of `v` have potential at least `p(v)`,
/// with no target link available?
pub(crate) fn detect_local_min_in(grower: &Grower<'_>, v: VertexId) -> bool {
    let vc = &grower.graph.vertex(v).config;
    let target = grower.graph.target_config();
    if euclid(vc.coords(), target.coords()) < grower.cfg.connect_radius * (1.0 - 1e-9)
        && grower.env.segment_feasible(vc, target)
    {
        return false;
    }
    !has_descent(grower, v, &grower.axis_moves())
}

/// Local-minimum test for vertex `v` of a finished graph.
pub fn detect_local_min(
    g: &SearchGraph,
    v: VertexId,
    env: &KnownEnvironment,
    cfg: &GenConfig,
) -> bool {
    let pot = PotentialField::new(g.target_config().clone());
    let grower = Grower::wrap(g.clone(), env, cfg, &pot);
    detect_local_min_in(&grower, v)
}

/// Distance from `x` to the nearest known constraint: revealed primitives
/// and the workspace boundary, per robot.
pub fn constraint_distance(env: &KnownEnvironment, x: &Configuration) -> f64 {
    let ws = env.truth().workspace();
    let wdim = env.workspace_dim();
    let wall = x
        .robots(wdim)
        .flat_map(|p| {
            p.iter()
                .enumerate()
                .map(move |(i, &c)| (c - ws.min()[i]).min(ws.max()[i] - c).max(0.0))
        })
        .fold(f64::INFINITY, f64::min);
    wall.min(env.distance_to_revealed(x))
}

/// Run one episode from trap vertex `trap` according to `policy`.
pub(crate) fn run_episode(
    grower: &mut Grower<'_>,
    trap: VertexId,
    policy: &TrapEscapePolicy,
) -> Result<EscapeOutcome, GraphError> {
    let event = match policy.mode {
        EscapeMode::None => return Ok(EscapeOutcome::Fallback),
        EscapeMode::NearObstacle => near_obstacle(grower, trap, policy)?,
        EscapeMode::FixedShape => fixed_shape(grower, trap, policy)?,
    };
    let outcome = event.outcome;
    grower.record_escape(event);
    Ok(outcome)
}

/// Best-first restricted growth shared by both strategies. Expands episode
/// vertices with `moves`, admitting candidates accepted by `admit`. Returns
/// `Escaped` on target link or escape-set entry.
fn restricted_search(
    grower: &mut Grower<'_>,
    seeds: &[VertexId],
    episode: &mut Vec<VertexId>,
    y: &mut VertexId,
    moves: &[Move],
    admit: &dyn Fn(&Grower<'_>, &Configuration) -> bool,
    origin: &Origin,
) -> Result<EscapeOutcome, GraphError> {
    let mut frontier: BinaryHeap<Reverse<(OrderedFloat<f64>, VertexId)>> = seeds
        .iter()
        .map(|&s| Reverse((OrderedFloat(grower.potential(s)), s)))
        .collect();
    let mut done = vec![false; grower.graph.len()];
    while let Some(Reverse((_, u))) = frontier.pop() {
        if done.len() < grower.graph.len() {
            done.resize(grower.graph.len(), false);
        }
        if done[u] {
            continue;
        }
        done[u] = true;
        grower.mark_burned(u);
        let mut fresh = Vec::new();
        for mv in moves {
            let (key, cand) = grower.candidate(u, mv);
            if !admit(grower, &cand) || !grower.admissible(u, &key, &cand) {
                continue;
            }
            let q = grower.insert(u, key, cand, origin.clone())?;
            fresh.push(q);
            episode.push(q);
            if grower.potential(q) > grower.potential(*y) {
                *y = q;
            }
            frontier.push(Reverse((OrderedFloat(grower.potential(q)), q)));
        }
        if grower.try_link_target(&fresh)? {
            return Ok(EscapeOutcome::Escaped);
        }
        let set = EscapeSet::around(grower.graph.vertex(*y).config.clone(), grower.step());
        // descent is judged with the subspace moves of this episode
        if let Some(&x) = fresh.iter().find(|&&q| set.contains(grower, q, moves)) {
            grower.escape_vertex = Some(x);
            return Ok(EscapeOutcome::Escaped);
        }
    }
    Ok(EscapeOutcome::Fallback)
}

fn near_obstacle(
    grower: &mut Grower<'_>,
    trap: VertexId,
    policy: &TrapEscapePolicy,
) -> Result<EscapeEvent, GraphError> {
    let floor = policy
        .epsilon_floor
        .unwrap_or_else(|| (grower.env.workspace_dim() as f64).sqrt() * grower.step());
    let trap_cfg = grower.graph.vertex(trap).config.clone();
    let epsilon = constraint_distance(grower.env, &trap_cfg).max(floor);
    let before = grower.graph.len();
    let mark = grower.burned_len();
    let mut event = EscapeEvent {
        activation_vertex: trap,
        mode: EscapeMode::NearObstacle,
        vertices_added: 0,
        relaxations: 0,
        outcome: EscapeOutcome::Escaped,
        epsilon: Some(epsilon),
    };
    let full = grower.axis_moves();
    let set = EscapeSet::around(trap_cfg, grower.step());
    if set.contains(grower, trap, &full) {
        return Ok(event);
    }
    let mut episode = vec![trap];
    let mut y = trap;
    let admit = move |g: &Grower<'_>, c: &Configuration| constraint_distance(g.env, c) <= epsilon;
    let outcome = restricted_search(
        grower,
        &[trap],
        &mut episode,
        &mut y,
        &full,
        &admit,
        &Origin::NearObstacle { epsilon },
    )?;
    if outcome == EscapeOutcome::Fallback {
        grower.restore_burned_since(mark);
    }
    event.vertices_added = grower.graph.len() - before;
    event.outcome = outcome;
    Ok(event)
}

/// Union-find clusters of robots joined by `pairs`, ordered by smallest member.
fn clusters(robots: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..robots).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; robots];
    for r in 0..robots {
        let root = find(&mut parent, r);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Vec::new());
        }
        out[slot[root]].push(r);
    }
    out
}

/// Rigid translations by `±l` along each workspace axis for each cluster.
fn translation_moves(groups: &[Vec<usize>], wdim: usize) -> Vec<Move> {
    let mut moves = Vec::new();
    for group in groups {
        for axis in 0..wdim {
            for sign in [1, -1] {
                moves.push(group.iter().map(|&r| (r * wdim + axis, sign)).collect());
            }
        }
    }
    moves
}

fn fixed_shape(
    grower: &mut Grower<'_>,
    trap: VertexId,
    policy: &TrapEscapePolicy,
) -> Result<EscapeEvent, GraphError> {
    let wdim = grower.env.workspace_dim();
    let robots = grower.graph.dim() / wdim;
    let mut active = policy.constraints(robots);
    let before = grower.graph.len();
    let mark = grower.burned_len();
    let mut event = EscapeEvent {
        activation_vertex: trap,
        mode: EscapeMode::FixedShape,
        vertices_added: 0,
        relaxations: 0,
        outcome: EscapeOutcome::Escaped,
        epsilon: None,
    };
    let trap_cfg = grower.graph.vertex(trap).config.clone();
    if EscapeSet::around(trap_cfg, grower.step()).contains(grower, trap, &grower.axis_moves()) {
        return Ok(event);
    }
    let mut episode = vec![trap];
    let mut y = trap;
    loop {
        let groups = clusters(robots, &active);
        if groups.len() == robots {
            event.outcome = EscapeOutcome::Fallback;
            break;
        }
        let moves = translation_moves(&groups, wdim);
        let seeds = episode.clone();
        let outcome = restricted_search(
            grower,
            &seeds,
            &mut episode,
            &mut y,
            &moves,
            &|_, _| true,
            &Origin::FixedShape {
                fixed_pairs: active.clone(),
            },
        )?;
        if outcome == EscapeOutcome::Escaped {
            event.outcome = outcome;
            break;
        }
        active.pop();
        event.relaxations += 1;
    }
    if event.outcome == EscapeOutcome::Fallback {
        grower.restore_burned_since(mark);
    }
    event.vertices_added = grower.graph.len() - before;
    Ok(event)
}
