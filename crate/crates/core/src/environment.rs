//! Ground-truth world and the planner's revealed view of it.
//!
//! Revelation is per primitive: once any robot comes within the sensing
//! radius of a primitive, the whole primitive becomes known. Primitives
//! flagged `known` are revealed from the start and play the role of a-priori
//! constraints, as does the optional pairwise distance band between robots.

use std::sync::Arc;

use crate::error::GeometryError;
use crate::geometry::{euclid, Aabb, Configuration, ObstaclePrimitive};

/// Pairwise robot distance band `dmin <= |p_i - p_j| <= dmax`; the straight
/// link between two robots must also avoid revealed obstacles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBand {
    pub dmin: f64,
    pub dmax: f64,
}

const BAND_TOL: f64 = 1e-9;

/// The true world. Never mutated by planning.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    workspace: Aabb,
    primitives: Vec<ObstaclePrimitive>,
    pair_band: Option<PairBand>,
}

impl GroundTruth {
    pub fn new(workspace: Aabb, primitives: Vec<ObstaclePrimitive>) -> Result<Self, GeometryError> {
        for p in &primitives {
            if let crate::geometry::Shape::Box(b) = &p.shape {
                if b.dim() != workspace.dim() {
                    return Err(GeometryError::DimensionMismatch {
                        expected: workspace.dim(),
                        actual: b.dim(),
                    });
                }
            }
        }
        Ok(Self {
            workspace,
            primitives,
            pair_band: None,
        })
    }

    pub fn with_pair_band(mut self, band: PairBand) -> Self {
        self.pair_band = Some(band);
        self
    }

    pub fn workspace(&self) -> &Aabb {
        &self.workspace
    }

    pub fn workspace_dim(&self) -> usize {
        self.workspace.dim()
    }

    pub fn primitives(&self) -> &[ObstaclePrimitive] {
        &self.primitives
    }

    pub fn pair_band(&self) -> Option<PairBand> {
        self.pair_band
    }

    /// Every primitive revealed, for fully known environments.
    pub fn all_known(&self) -> Self {
        let mut truth = self.clone();
        for p in &mut truth.primitives {
            p.known = true;
        }
        truth
    }

    /// Ids of primitives whose interior contains the workspace point.
    pub fn colliding(&self, p: &[f64]) -> Vec<usize> {
        self.primitives
            .iter()
            .enumerate()
            .filter(|(_, prim)| prim.contains(p))
            .map(|(i, _)| i)
            .collect()
    }
}

/// The currently revealed obstacle set plus a-priori constraints.
#[derive(Debug, Clone)]
pub struct KnownEnvironment {
    truth: Arc<GroundTruth>,
    revealed: Vec<bool>,
    sensing_radius: f64,
    sample_step: f64,
}

impl KnownEnvironment {
    /// Only the primitives flagged `known` are revealed.
    pub fn new(truth: Arc<GroundTruth>, sensing_radius: f64) -> Self {
        let revealed = truth.primitives.iter().map(|p| p.known).collect();
        Self {
            truth,
            revealed,
            sensing_radius,
            sample_step: 1e-3,
        }
    }

    /// Everything revealed.
    pub fn fully_known(truth: Arc<GroundTruth>) -> Self {
        let revealed = vec![true; truth.primitives.len()];
        Self {
            truth,
            revealed,
            sensing_radius: f64::INFINITY,
            sample_step: 1e-3,
        }
    }

    /// Pitch used for sampled tests (implicit constraints, pair constraints).
    pub fn with_sample_step(mut self, step: f64) -> Self {
        self.sample_step = step;
        self
    }

    pub fn sample_step(&self) -> f64 {
        self.sample_step
    }

    pub fn sensing_radius(&self) -> f64 {
        self.sensing_radius
    }

    pub fn truth(&self) -> &Arc<GroundTruth> {
        &self.truth
    }

    pub fn workspace_dim(&self) -> usize {
        self.truth.workspace_dim()
    }

    pub fn is_revealed(&self, id: usize) -> bool {
        self.revealed[id]
    }

    pub fn revealed_ids(&self) -> Vec<usize> {
        (0..self.revealed.len())
            .filter(|&i| self.revealed[i])
            .collect()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.iter().filter(|r| **r).count()
    }

    fn revealed_prims(&self) -> impl Iterator<Item = (usize, &ObstaclePrimitive)> {
        self.truth
            .primitives
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.revealed[*i])
    }

    /// Reveal every primitive within the sensing radius of any robot. Returns
    /// the ids revealed by this call, ascending.
    pub fn sense(&mut self, x: &Configuration) -> Vec<usize> {
        let wdim = self.workspace_dim();
        let mut fresh = Vec::new();
        for (id, prim) in self.truth.primitives.iter().enumerate() {
            if self.revealed[id] {
                continue;
            }
            if x.robots(wdim)
                .any(|pos| prim.distance_to(pos) <= self.sensing_radius)
            {
                self.revealed[id] = true;
                fresh.push(id);
            }
        }
        fresh
    }

    /// Non-mutating form of [`sense`](Self::sense).
    pub fn sensed(&self, x: &Configuration) -> KnownEnvironment {
        let mut next = self.clone();
        next.sense(x);
        next
    }

    /// Minimum workspace distance from any robot to any revealed primitive.
    pub fn distance_to_revealed(&self, x: &Configuration) -> f64 {
        self.distance_to_ids(x, &self.revealed_ids())
    }

    /// Minimum workspace distance from any robot to the listed primitives.
    pub fn distance_to_ids(&self, x: &Configuration, ids: &[usize]) -> f64 {
        let wdim = self.workspace_dim();
        ids.iter()
            .flat_map(|&id| {
                let prim = &self.truth.primitives[id];
                x.robots(wdim).map(move |pos| prim.distance_to(pos))
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn robot_positions_ok(&self, x: &Configuration) -> bool {
        let wdim = self.workspace_dim();
        if x.dim() == 0 || !x.dim().is_multiple_of(wdim) {
            return false;
        }
        x.robots(wdim).all(|pos| {
            self.truth.workspace.contains_closed(pos)
                && !self.revealed_prims().any(|(_, prim)| prim.contains(pos))
        })
    }

    fn link_blocked(&self, a: &[f64], b: &[f64]) -> bool {
        self.revealed_prims()
            .any(|(_, prim)| prim.segment_hits(a, b, self.sample_step))
    }

    fn band_ok(&self, x: &Configuration, band: PairBand) -> bool {
        let wdim = self.workspace_dim();
        let k = x.dim() / wdim;
        for i in 0..k {
            for j in i + 1..k {
                let (pi, pj) = (x.robot(i, wdim), x.robot(j, wdim));
                let d = euclid(pi, pj);
                if d < band.dmin - BAND_TOL || d > band.dmax + BAND_TOL {
                    return false;
                }
                if self.link_blocked(pi, pj) {
                    return false;
                }
            }
        }
        true
    }

    /// Feasibility of a single configuration against everything revealed.
    pub fn point_feasible(&self, x: &Configuration) -> bool {
        if !self.robot_positions_ok(x) {
            return false;
        }
        match self.truth.pair_band {
            Some(band) if x.dim() > self.workspace_dim() => self.band_ok(x, band),
            _ => true,
        }
    }

    /// Feasibility of the straight configuration-space segment `[a, b]`.
    ///
    /// Robot sweeps are tested per primitive (exactly for boxes); the pair band
    /// and robot links are sampled at the environment's sample step.
    pub fn segment_feasible(&self, a: &Configuration, b: &Configuration) -> bool {
        let wdim = self.workspace_dim();
        if a.dim() != b.dim() || !a.dim().is_multiple_of(wdim) {
            return false;
        }
        if !self.point_feasible(a) || !self.point_feasible(b) {
            return false;
        }
        for (pa, pb) in a.robots(wdim).zip(b.robots(wdim)) {
            if self.link_blocked(pa, pb) {
                return false;
            }
        }
        if let Some(band) = self.truth.pair_band {
            if a.dim() > wdim {
                let len = euclid(a.coords(), b.coords());
                let n = (len / self.sample_step).ceil() as usize;
                for i in 1..n {
                    let x = a.lerp(b, i as f64 / n as f64);
                    if !self.band_ok(&x, band) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Ids of revealed primitives that the segment `[a, b]` runs into, either
    /// with a robot or with a robot-to-robot link.
    pub fn blocking_ids(&self, a: &Configuration, b: &Configuration) -> Vec<usize> {
        let wdim = self.workspace_dim();
        let k = a.dim() / wdim;
        let mut hits = Vec::new();
        for (id, prim) in self.revealed_prims() {
            let robot_hit = a
                .robots(wdim)
                .zip(b.robots(wdim))
                .any(|(pa, pb)| prim.segment_hits(pa, pb, self.sample_step));
            let link_hit = !robot_hit && self.truth.pair_band.is_some() && k > 1 && {
                let len = euclid(a.coords(), b.coords());
                let n = (len / self.sample_step).ceil().max(1.0) as usize;
                (0..=n).any(|s| {
                    let x = a.lerp(b, s as f64 / n as f64);
                    (0..k).any(|i| {
                        (i + 1..k).any(|j| {
                            prim.segment_hits(x.robot(i, wdim), x.robot(j, wdim), self.sample_step)
                        })
                    })
                })
            };
            if robot_hit || link_hit {
                hits.push(id);
            }
        }
        hits
    }
}

/// Free-function form of [`KnownEnvironment::point_feasible`].
pub fn point_feasible(x: &Configuration, env: &KnownEnvironment) -> bool {
    env.point_feasible(x)
}

/// Free-function form of [`KnownEnvironment::segment_feasible`].
pub fn segment_feasible(a: &Configuration, b: &Configuration, env: &KnownEnvironment) -> bool {
    env.segment_feasible(a, b)
}

/// Pair band and link check with an explicit band, independent of the band
/// configured on the ground truth. Robot positions must also be feasible.
pub fn multi_robot_feasible(
    x: &Configuration,
    env: &KnownEnvironment,
    dmin: f64,
    dmax: f64,
) -> bool {
    env.robot_positions_ok(x) && env.band_ok(x, PairBand { dmin, dmax })
}

/// Free-function form of [`KnownEnvironment::sensed`].
pub fn sense(known: &KnownEnvironment, x: &Configuration) -> KnownEnvironment {
    known.sensed(x)
}
