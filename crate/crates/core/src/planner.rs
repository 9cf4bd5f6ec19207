//! Replanning loop: grow a graph, extract its path, move along it while
//! sensing, stop short of newly revealed obstacles, repeat.

use std::sync::Arc;

use crate::environment::{GroundTruth, KnownEnvironment};
use crate::error::{GraphError, PlanError};
use crate::escape::TrapEscapePolicy;
use crate::geometry::{euclid, Configuration, PotentialField};
use crate::graph::{generate_graph, GenConfig, GraphResult, SearchGraph};
use crate::paths::{backtrace, GraphPath};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Lattice pitch `l`.
    pub step: f64,
    pub sensing_radius: f64,
    /// Defaults to `step`.
    pub connect_radius: Option<f64>,
    /// Stop once clearance would fall below this fraction of the sensing radius.
    pub stop_fraction: f64,
    pub max_vertices: usize,
    pub escape: TrapEscapePolicy,
    /// Replanning cap; `None` uses four times the workspace lattice capacity.
    pub max_iterations: Option<usize>,
}

impl PlannerConfig {
    pub fn new(step: f64, sensing_radius: f64) -> Self {
        Self {
            step,
            sensing_radius,
            connect_radius: None,
            stop_fraction: 0.5,
            max_vertices: 2_000_000,
            escape: TrapEscapePolicy::none(),
            max_iterations: None,
        }
    }

    pub fn with_escape(mut self, escape: TrapEscapePolicy) -> Self {
        self.escape = escape;
        self
    }

    pub fn with_stop_fraction(mut self, f: f64) -> Self {
        self.stop_fraction = f;
        self
    }

    pub fn with_max_vertices(mut self, n: usize) -> Self {
        self.max_vertices = n;
        self
    }

    pub fn with_connect_radius(mut self, r: f64) -> Self {
        self.connect_radius = Some(r);
        self
    }

    /// Motion increment `δ = l / 10`.
    pub fn motion_step(&self) -> f64 {
        self.step / 10.0
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig::new(self.step)
            .with_connect_radius(self.connect_radius.unwrap_or(self.step))
            .with_max_vertices(self.max_vertices)
    }

    fn validate(&self) -> Result<(), PlanError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(PlanError::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.sensing_radius > 0.0) {
            return Err(PlanError::InvalidConfig(format!(
                "sensing radius must be positive, got {}",
                self.sensing_radius
            )));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction < 1.0) {
            return Err(PlanError::InvalidConfig(format!(
                "stop_fraction must lie in (0, 1), got {}",
                self.stop_fraction
            )));
        }
        Ok(())
    }
}

/// Number of lattice points of pitch `step` in the configuration space of
/// `robots` robots over `truth`'s workspace, saturating.
pub fn lattice_capacity(truth: &GroundTruth, robots: usize, step: f64) -> usize {
    let ws = truth.workspace();
    let per_robot = ws
        .min()
        .iter()
        .zip(ws.max())
        .map(|(lo, hi)| ((hi - lo) / step + 1e-9).floor() as usize + 1)
        .fold(1usize, |acc, k| acc.saturating_mul(k));
    (0..robots).fold(1usize, |acc, _| acc.saturating_mul(per_robot))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionStatus {
    ReachedTarget,
    Blocked,
    /// Reached the end of the path without it ending at the target.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionOutcome {
    pub traversed: Vec<Configuration>,
    pub status: MotionStatus,
    pub stop_point: Configuration,
    /// Distance to the primitives that block the path, or to everything
    /// revealed when not blocked.
    pub stop_clearance: f64,
    /// Distance to the nearest revealed primitive at the stop point.
    pub nearest_clearance: f64,
    /// Primitives revealed during this motion, in order.
    pub revealed: Vec<usize>,
    /// Primitives that block the remaining path (empty unless blocked).
    pub blockers: Vec<usize>,
}

/// Sample the polyline at spacing at most `delta`, starting with its first
/// vertex. Every polyline vertex is a sample.
fn sample_polyline(points: &[Configuration], delta: f64) -> Vec<Configuration> {
    let mut out = vec![points[0].clone()];
    for w in points.windows(2) {
        let len = euclid(w[0].coords(), w[1].coords());
        if len == 0.0 {
            continue;
        }
        let m = ((len / delta) - 1e-9).ceil().max(1.0) as usize;
        for s in 1..m {
            out.push(w[0].lerp(&w[1], s as f64 / m as f64));
        }
        out.push(w[1].clone());
    }
    out
}

/// First sample index `j > from` whose approach from `j - 1` is infeasible.
fn first_block(samples: &[Configuration], from: usize, known: &KnownEnvironment) -> Option<usize> {
    (from + 1..samples.len()).find(|&j| !known.segment_feasible(&samples[j - 1], &samples[j]))
}

/// Move along `points` from its first vertex, sensing every `δ`.
///
/// When the untraversed remainder runs into something newly revealed, the
/// robot keeps going while the next sample stays at least
/// `stop_fraction * R` away from the blocking primitives, and never passes
/// the last sample before the block.
pub fn move_along(
    points: &[Configuration],
    target: &Configuration,
    known: &mut KnownEnvironment,
    cfg: &PlannerConfig,
) -> Result<MotionOutcome, PlanError> {
    let samples = sample_polyline(points, cfg.motion_step());
    let threshold = cfg.stop_fraction * cfg.sensing_radius;
    let mut traversed = vec![samples[0].clone()];
    let mut revealed = Vec::new();
    let mut block: Option<(usize, Vec<usize>)> = None;
    let mut i = 0;
    loop {
        let fresh = known.sense(&samples[i]);
        if !fresh.is_empty() {
            if !known.point_feasible(&samples[i]) {
                return Err(PlanError::ModelViolation {
                    position: samples[i].coords().to_vec(),
                });
            }
            revealed.extend_from_slice(&fresh);
            if let Some(j) = first_block(&samples, i, known) {
                let ids = known.blocking_ids(&samples[j - 1], &samples[j]);
                let ids = if ids.is_empty() {
                    known.revealed_ids()
                } else {
                    ids
                };
                block = Some((j, ids));
            }
        }
        if let Some((j, ids)) = &block {
            let next = i + 1;
            let proceed = next < *j && known.distance_to_ids(&samples[next], ids) >= threshold;
            if !proceed {
                let stop = samples[i].clone();
                return Ok(MotionOutcome {
                    stop_clearance: known.distance_to_ids(&stop, ids),
                    nearest_clearance: known.distance_to_revealed(&stop),
                    traversed,
                    status: MotionStatus::Blocked,
                    stop_point: stop,
                    revealed,
                    blockers: ids.clone(),
                });
            }
        }
        if i + 1 == samples.len() {
            let stop = samples[i].clone();
            let reached = euclid(stop.coords(), target.coords()) <= 1e-12;
            let clearance = known.distance_to_revealed(&stop);
            return Ok(MotionOutcome {
                traversed,
                status: if reached {
                    MotionStatus::ReachedTarget
                } else {
                    MotionStatus::Exhausted
                },
                stop_point: stop,
                stop_clearance: clearance,
                nearest_clearance: clearance,
                revealed,
                blockers: Vec::new(),
            });
        }
        i += 1;
        traversed.push(samples[i].clone());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Success,
    NoFeasiblePath,
    ResourceLimit,
}

impl PlanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanStatus::Success => "success",
            PlanStatus::NoFeasiblePath => "no-feasible-path",
            PlanStatus::ResourceLimit => "resource-limit",
        }
    }
}

/// One replanning round.
#[derive(Debug, Clone)]
pub struct Segment {
    pub graph: SearchGraph,
    pub connected: bool,
    pub path: Option<GraphPath>,
    pub motion: Option<MotionOutcome>,
    pub root_potential: f64,
    /// Primitive ids known when the graph was generated.
    pub known_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    /// Arc length travelled so far.
    pub t: f64,
    pub segment: usize,
    pub config: Configuration,
}

/// Table-1-shaped summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMetrics {
    pub num_robots: usize,
    pub step: f64,
    pub dim: usize,
    pub vertex_counts: Vec<usize>,
    pub avg_vertices: f64,
    pub max_vertices: usize,
    pub trapped: bool,
    pub num_graphs: usize,
}

impl PlanMetrics {
    pub const HEADER: &'static str =
        "num_robots,l,dim,avg_vertices,max_vertices,trapped,num_graphs";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.num_robots,
            self.step,
            self.dim,
            self.avg_vertices,
            self.max_vertices,
            self.trapped,
            self.num_graphs
        )
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub segments: Vec<Segment>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub status: PlanStatus,
    pub metrics: PlanMetrics,
    /// Revealed primitive ids at the end of the run.
    pub revealed: Vec<usize>,
    /// Set when the run stopped on the vertex limit or iteration cap.
    pub limit: Option<String>,
}

impl PlanResult {
    pub fn final_config(&self) -> &Configuration {
        &self
            .trajectory
            .last()
            .expect("trajectory holds the start")
            .config
    }

    pub fn trajectory_configs(&self) -> Vec<Configuration> {
        self.trajectory.iter().map(|p| p.config.clone()).collect()
    }

    /// `t,segment_index,coord...` rows with a header.
    pub fn trajectory_csv(&self) -> String {
        let dim = self.metrics.dim;
        let mut out = String::from("t,segment_index");
        for i in 0..dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for p in &self.trajectory {
            out.push_str(&format!("{},{}", p.t, p.segment));
            for c in p.config.coords() {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn metrics_csv(&self) -> String {
        format!("{}\n{}\n", PlanMetrics::HEADER, self.metrics.csv_row())
    }
}

fn metrics(segments: &[Segment], robots: usize, step: f64, dim: usize) -> PlanMetrics {
    let vertex_counts: Vec<usize> = segments.iter().map(|s| s.graph.len()).collect();
    let num_graphs = vertex_counts.len();
    let avg_vertices = if num_graphs == 0 {
        0.0
    } else {
        vertex_counts.iter().sum::<usize>() as f64 / num_graphs as f64
    };
    PlanMetrics {
        num_robots: robots,
        step,
        dim,
        max_vertices: vertex_counts.iter().copied().max().unwrap_or(0),
        avg_vertices,
        trapped: segments.iter().any(|s| s.graph.stats().local_minima > 0),
        num_graphs,
        vertex_counts,
    }
}

/// Run the replanning loop from `start` to `target` in `truth`.
pub fn plan(
    truth: Arc<GroundTruth>,
    start: &Configuration,
    target: &Configuration,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let wdim = truth.workspace_dim();
    if start.dim() != target.dim() || !start.dim().is_multiple_of(wdim) || start.dim() == 0 {
        return Err(PlanError::InvalidConfig(format!(
            "start/target dimensions {}/{} do not stack workspace dimension {wdim}",
            start.dim(),
            target.dim()
        )));
    }
    let robots = start.dim() / wdim;
    let cap = cfg
        .max_iterations
        .unwrap_or_else(|| lattice_capacity(&truth, robots, cfg.step).saturating_mul(4));
    let mut known =
        KnownEnvironment::new(truth, cfg.sensing_radius).with_sample_step(cfg.motion_step());
    let gen = cfg.gen_config();
    let pot = PotentialField::new(target.clone());
    let mut x = start.clone();
    let mut t = 0.0;
    let mut trajectory = vec![TrajectoryPoint {
        t,
        segment: 0,
        config: x.clone(),
    }];
    let mut segments: Vec<Segment> = Vec::new();
    known.sense(&x);
    if !known.point_feasible(&x) {
        return Err(PlanError::ModelViolation {
            position: x.coords().to_vec(),
        });
    }
    let finish = |segments: Vec<Segment>, trajectory, status, known: &KnownEnvironment, limit| {
        let m = metrics(&segments, robots, cfg.step, start.dim());
        PlanResult {
            segments,
            trajectory,
            status,
            metrics: m,
            revealed: known.revealed_ids(),
            limit,
        }
    };
    loop {
        if euclid(x.coords(), target.coords()) <= 1e-12 {
            return Ok(finish(
                segments,
                trajectory,
                PlanStatus::Success,
                &known,
                None,
            ));
        }
        if segments.len() >= cap {
            let why = format!("replanning cap of {cap} graphs reached");
            return Ok(finish(
                segments,
                trajectory,
                PlanStatus::ResourceLimit,
                &known,
                Some(why),
            ));
        }
        let result = match generate_graph(&x, &known, &gen, &pot, &cfg.escape) {
            Ok(r) => r,
            Err(GraphError::VertexLimit { limit }) => {
                let why = format!("vertex limit of {limit} exceeded");
                return Ok(finish(
                    segments,
                    trajectory,
                    PlanStatus::ResourceLimit,
                    &known,
                    Some(why),
                ));
            }
            Err(e) => return Err(e.into()),
        };
        let root_potential = pot.at(x.coords());
        let known_ids = known.revealed_ids();
        let graph = match result {
            GraphResult::Empty(graph) => {
                segments.push(Segment {
                    graph,
                    connected: false,
                    path: None,
                    motion: None,
                    root_potential,
                    known_ids,
                });
                return Ok(finish(
                    segments,
                    trajectory,
                    PlanStatus::NoFeasiblePath,
                    &known,
                    None,
                ));
            }
            GraphResult::Connected(graph) => graph,
        };
        let path = backtrace(&graph)?;
        let points = path.configs(&graph);
        let motion = move_along(&points, target, &mut known, cfg)?;
        let seg_index = segments.len();
        for w in motion.traversed.windows(2) {
            t += euclid(w[0].coords(), w[1].coords());
            trajectory.push(TrajectoryPoint {
                t,
                segment: seg_index,
                config: w[1].clone(),
            });
        }
        x = motion.stop_point.clone();
        segments.push(Segment {
            graph,
            connected: true,
            path: Some(path),
            motion: Some(motion),
            root_potential,
            known_ids,
        });
    }
}
