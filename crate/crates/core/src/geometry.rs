//! Configuration-space geometry: stacked robot configurations, the distance
//! potential, and obstacle primitives with exact (boxes) or sampled
//! (implicit functions) intersection tests.
//!
//! Obstacle interiors are open sets. A point on a box face is feasible, and a
//! segment that only grazes a face does not intersect the box. Box interiors
//! are shrunk by [`BOUNDARY_TOL`] so that lattice points computed in floating
//! point land on faces consistently.

use std::fmt;
use std::sync::Arc;

use crate::error::GeometryError;

/// User-supplied constraint function; negative values are violations.
pub type ConstraintFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Slack applied to box faces before deciding strict containment.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// A point of the configuration space: the stacked workspace positions of all
/// robots, `[x_0, y_0, x_1, y_1, ...]` for planar robots.
#[derive(Clone, PartialEq, Default)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Workspace position of every robot, for workspace dimension `wdim`.
    pub fn robots(&self, wdim: usize) -> std::slice::ChunksExact<'_, f64> {
        self.0.chunks_exact(wdim)
    }

    pub fn robot(&self, index: usize, wdim: usize) -> &[f64] {
        &self.0[index * wdim..(index + 1) * wdim]
    }

    /// `self + s * (other - self)`.
    pub fn lerp(&self, other: &Configuration, s: f64) -> Configuration {
        Configuration(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * (b - a))
                .collect(),
        )
    }

    pub fn offset(&self, axis: usize, amount: f64) -> Configuration {
        let mut coords = self.0.clone();
        coords[axis] += amount;
        Configuration(coords)
    }

    fn check_dim(&self, other: &Configuration) -> Result<(), GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

impl<const N: usize> From<[f64; N]> for Configuration {
    fn from(coords: [f64; N]) -> Self {
        Self(coords.to_vec())
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between two configurations.
pub fn distance(a: &Configuration, b: &Configuration) -> Result<f64, GeometryError> {
    a.check_dim(b)?;
    Ok(euclid(a.coords(), b.coords()))
}

/// The distance-to-target potential `p(x) = |x - target|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    target: Configuration,
}

impl PotentialField {
    pub fn new(target: Configuration) -> Self {
        Self { target }
    }

    pub fn target(&self) -> &Configuration {
        &self.target
    }

    pub fn potential(&self, x: &Configuration) -> Result<f64, GeometryError> {
        distance(x, &self.target)
    }

    /// Potential of a raw coordinate slice; the caller guarantees dimensions.
    pub(crate) fn at(&self, coords: &[f64]) -> f64 {
        euclid(coords, self.target.coords())
    }

    /// Analytic gradient `(x - target) / |x - target|`, zero at the target.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = euclid(x, self.target.coords());
        if r == 0.0 {
            return vec![0.0; x.len()];
        }
        x.iter()
            .zip(self.target.coords())
            .map(|(a, t)| (a - t) / r)
            .collect()
    }
}

/// Axis-aligned box given by its min and max corners.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self, GeometryError> {
        if min.len() != max.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: min.len(),
                actual: max.len(),
            });
        }
        if let Some(axis) = (0..min.len()).find(|&i| min[i] > max[i]) {
            return Err(GeometryError::InvalidBox { axis });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Closed containment, used for workspace bounds.
    pub fn contains_closed(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(x, (lo, hi))| *x >= lo - BOUNDARY_TOL && *x <= hi + BOUNDARY_TOL)
    }

    /// Strict containment in the (open) interior.
    pub fn contains_open(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(x, (lo, hi))| *x > lo + BOUNDARY_TOL && *x < hi - BOUNDARY_TOL)
    }

    /// Euclidean distance from `p` to the closed box; zero inside.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (lo, hi))| {
                let d = (lo - x).max(x - hi).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Exact slab test: does the closed segment `[a, b]` meet the open interior?
    pub fn segment_hits_interior(&self, a: &[f64], b: &[f64]) -> bool {
        let mut enter = f64::NEG_INFINITY;
        let mut exit = f64::INFINITY;
        for i in 0..a.len() {
            let lo = self.min[i] + BOUNDARY_TOL;
            let hi = self.max[i] - BOUNDARY_TOL;
            if lo >= hi {
                return false;
            }
            let d = b[i] - a[i];
            if d == 0.0 {
                if a[i] <= lo || a[i] >= hi {
                    return false;
                }
                continue;
            }
            let (t0, t1) = {
                let u = (lo - a[i]) / d;
                let v = (hi - a[i]) / d;
                if u < v {
                    (u, v)
                } else {
                    (v, u)
                }
            };
            enter = enter.max(t0);
            exit = exit.min(t1);
            if enter >= exit {
                return false;
            }
        }
        enter < exit && enter < 1.0 && exit > 0.0
    }
}

/// A constraint function evaluated in the workspace. Negative values are
/// violations; the magnitude is expected to approximate signed distance.
#[derive(Clone)]
pub enum ImplicitConstraint {
    /// Solid ball: `|p - center| - radius`.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Custom {
        label: String,
        f: ConstraintFn,
    },
}

impl ImplicitConstraint {
    pub fn value(&self, p: &[f64]) -> f64 {
        match self {
            ImplicitConstraint::Ball { center, radius } => euclid(p, center) - radius,
            ImplicitConstraint::Custom { f, .. } => f(p),
        }
    }
}

impl fmt::Debug for ImplicitConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImplicitConstraint::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            ImplicitConstraint::Custom { label, .. } => {
                f.debug_struct("Custom").field("label", label).finish()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Box(Aabb),
    Implicit(ImplicitConstraint),
}

/// One obstacle (or a-priori constraint when `known` is set).
#[derive(Debug, Clone)]
pub struct ObstaclePrimitive {
    pub shape: Shape,
    pub known: bool,
}

impl ObstaclePrimitive {
    pub fn boxed(min: Vec<f64>, max: Vec<f64>, known: bool) -> Result<Self, GeometryError> {
        Ok(Self {
            shape: Shape::Box(Aabb::new(min, max)?),
            known,
        })
    }

    pub fn ball(center: Vec<f64>, radius: f64, known: bool) -> Self {
        Self {
            shape: Shape::Implicit(ImplicitConstraint::Ball { center, radius }),
            known,
        }
    }

    /// True iff the workspace point lies in the open interior.
    pub fn contains(&self, p: &[f64]) -> bool {
        match &self.shape {
            Shape::Box(b) => b.contains_open(p),
            Shape::Implicit(c) => c.value(p) < -BOUNDARY_TOL,
        }
    }

    /// Workspace distance from `p` to the primitive (zero inside).
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box(b) => b.distance_to(p),
            Shape::Implicit(c) => c.value(p).max(0.0),
        }
    }

    /// Does the workspace segment `[a, b]` enter the interior? Boxes are tested
    /// exactly; implicit constraints are sampled at pitch `sample_step`.
    pub fn segment_hits(&self, a: &[f64], b: &[f64], sample_step: f64) -> bool {
        match &self.shape {
            Shape::Box(bx) => bx.segment_hits_interior(a, b),
            Shape::Implicit(_) => {
                let len = euclid(a, b);
                let n = (len / sample_step).ceil().max(1.0) as usize;
                let mut p = vec![0.0; a.len()];
                (0..=n).any(|i| {
                    let s = i as f64 / n as f64;
                    for (k, slot) in p.iter_mut().enumerate() {
                        *slot = a[k] + s * (b[k] - a[k]);
                    }
                    self.contains(&p)
                })
            }
        }
    }
}
