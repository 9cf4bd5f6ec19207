use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::FpeError;
use crate::geometry::Configuration;

use super::lattice::Lattice;
use super::solver::{
    evolve_to_steady, evolve_with, DensityField, EvolveOptions, ProjectionWeights,
};

/// Rate above which a node counts as receiving mass.
pub const RATE_THRESHOLD: f64 = 1e-14;

/// Relative tolerance under which two steady densities count as tied.
const DENSITY_TIE: f64 = 1e-9;

/// Set of lattice nodes, covered by closed boxes of half-width `half_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    members: Vec<bool>,
    anchor: Vec<f64>,
    spacing: f64,
    half_width: f64,
    keys: HashSet<Vec<i64>>,
}

impl Region {
    pub fn empty(lat: &Lattice) -> Self {
        Self {
            members: vec![false; lat.len()],
            anchor: lat.anchor().to_vec(),
            spacing: lat.spacing(),
            half_width: lat.spacing(),
            keys: HashSet::new(),
        }
    }

    pub fn from_nodes(lat: &Lattice, nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut r = Self::empty(lat);
        for j in nodes {
            r.insert(lat, j);
        }
        r
    }

    pub fn insert(&mut self, lat: &Lattice, j: usize) -> bool {
        if self.members[j] {
            return false;
        }
        self.members[j] = true;
        self.keys.insert(lat.key(j).to_vec());
        true
    }

    pub fn union(&mut self, lat: &Lattice, other: &Region) {
        for j in other.nodes() {
            self.insert(lat, j);
        }
    }

    pub fn contains_node(&self, j: usize) -> bool {
        self.members[j]
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(j, _)| j)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Box centres of the region.
    pub fn centers(&self, lat: &Lattice) -> Vec<Vec<f64>> {
        self.nodes()
            .map(|j| {
                lat.coords(j)
                    .iter()
                    .zip(lat.anchor())
                    .zip(&self.anchor)
                    .map(|((c, a0), a1)| c - a0 + a1)
                    .collect()
            })
            .collect()
    }

    /// The same boxes translated by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        let mut r = self.clone();
        for (a, o) in r.anchor.iter_mut().zip(offset) {
            *a += o;
        }
        r
    }

    /// Is `x` inside some closed box of the region (sup-norm)?
    pub fn contains_point(&self, x: &[f64]) -> bool {
        if x.len() != self.anchor.len() {
            return false;
        }
        let n = x.len();
        let z: Vec<f64> = x
            .iter()
            .zip(&self.anchor)
            .map(|(xi, ai)| (xi - ai) / self.spacing)
            .collect();
        let reach = (self.half_width / self.spacing).ceil() as i64;
        let base: Vec<i64> = z.iter().map(|v| v.floor() as i64).collect();
        let span = (2 * reach + 2) as usize;
        let total = span.pow(n as u32);
        let tol = self.half_width * 1e-9;
        (0..total).any(|mut code| {
            let mut key = Vec::with_capacity(n);
            for &b in &base {
                key.push(b - reach + (code % span) as i64);
                code /= span;
            }
            self.keys.contains(&key)
                && key.iter().zip(x).zip(&self.anchor).all(|((&k, xi), ai)| {
                    (xi - (ai + self.spacing * k as f64)).abs() <= self.half_width + tol
                })
        })
    }
}

/// Is every trajectory sample inside the region's box union?
pub fn contains_path(region: &Region, trajectory: &[Configuration]) -> bool {
    trajectory.iter().all(|x| region.contains_point(x.coords()))
}

/// Nodes that ever gain mass while a unit mass at `start` flows down the
/// steepest-descent edges.
pub fn gradient_region(
    start: usize,
    lat: &Lattice,
    opts: EvolveOptions,
) -> Result<Region, FpeError> {
    let w = ProjectionWeights::gradient(lat);
    let mut region = Region::empty(lat);
    region.insert(lat, start);
    let mut hit = vec![false; lat.len()];
    evolve_with(
        &DensityField::delta(lat.len(), start),
        lat,
        &w,
        opts,
        |info| {
            for (j, &r) in info.rate.iter().enumerate() {
                if r > RATE_THRESHOLD {
                    hit[j] = true;
                }
            }
        },
    )?;
    for (j, h) in hit.into_iter().enumerate() {
        if h {
            region.insert(lat, j);
        }
    }
    Ok(region)
}

/// Outcome of one diffusion round.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionRound {
    /// Nodes added, layer by layer (layer 0, the previous region, excluded).
    pub layers: Vec<usize>,
    /// Start of the next gradient round; `None` when nothing lies outside.
    pub next_start: Option<usize>,
    pub steady: Vec<f64>,
}

/// Lowest-potential node adjacent to `region` but outside it.
pub fn escape_start(region: &Region, lat: &Lattice) -> Option<usize> {
    let p = lat.potential();
    let mut best: Option<usize> = None;
    for j in region.nodes() {
        for &k in lat.neighbors(j) {
            if !region.contains_node(k)
                && best.is_none_or(|b| p[k] < p[b] || (p[k] == p[b] && k < b))
            {
                best = Some(k);
            }
        }
    }
    best
}

/// Does some node of `nodes` have a lower-potential neighbour outside `region`?
fn has_exit(nodes: &[usize], region: &Region, lat: &Lattice) -> bool {
    let p = lat.potential();
    nodes.iter().any(|&z| {
        lat.neighbors(z)
            .iter()
            .any(|&y| !region.contains_node(y) && p[y] < p[z])
    })
}

/// Spread from `prev` under diffusion strength `beta` and grow it one
/// highest-density node at a time until a layer can descend out of the region.
pub fn diffusion_region(
    prev: &Region,
    lat: &Lattice,
    beta: f64,
    epsilon: f64,
    opts: EvolveOptions,
) -> Result<DiffusionRound, FpeError> {
    if !(beta > 0.0) {
        return Err(FpeError::InvalidLattice(format!(
            "diffusion needs beta > 0, got {beta}"
        )));
    }
    let inside = prev.len();
    let outside = lat.len() - inside;
    if inside == 0 {
        return Err(FpeError::InvalidLattice(
            "diffusion needs a non-empty region".into(),
        ));
    }
    if outside == 0 {
        return Ok(DiffusionRound {
            layers: Vec::new(),
            next_start: None,
            steady: lat.gibbs(beta),
        });
    }
    let mut eps = epsilon;
    while (1.0 - eps) / inside as f64 <= eps / outside as f64 {
        eps /= 10.0;
    }
    let rho: Vec<f64> = (0..lat.len())
        .map(|j| {
            if prev.contains_node(j) {
                (1.0 - eps) / inside as f64
            } else {
                eps / outside as f64
            }
        })
        .collect();
    let steady = evolve_to_steady(
        &DensityField::new(rho, beta)?,
        lat,
        &ProjectionWeights::diffusion(lat),
        opts,
    )?
    .field
    .rho;
    let mut region = prev.clone();
    let mut layers = Vec::new();
    // layer 0 is the previous region itself; the exit test starts at layer 1
    {
        loop {
            let mut best: Option<usize> = None;
            for j in region.nodes() {
                for &k in lat.neighbors(j) {
                    if region.contains_node(k) {
                        continue;
                    }
                    best = match best {
                        None => Some(k),
                        Some(b) => {
                            let (rk, rb) = (steady[k], steady[b]);
                            let tie = (rk - rb).abs() <= DENSITY_TIE * rk.max(rb);
                            if (tie && k < b) || (!tie && rk > rb) {
                                Some(k)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(x) = best else { break };
            region.insert(lat, x);
            layers.push(x);
            if has_exit(&[x], &region, lat) {
                break;
            }
        }
    }
    Ok(DiffusionRound {
        next_start: escape_start(&region, lat),
        layers,
        steady,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOptions {
    /// Diffusion strength; `None` uses a tenth of the potential range.
    pub beta: Option<f64>,
    pub epsilon: f64,
    pub evolve: EvolveOptions,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            beta: None,
            epsilon: 1e-6,
            evolve: EvolveOptions::default(),
        }
    }
}

/// One alternation of the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub gradient_start: usize,
    pub gradient_nodes: usize,
    pub diffusion_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBuild {
    pub region: Region,
    pub rounds: Vec<Round>,
    /// Steady density of the last diffusion round, or of the last gradient
    /// round when no diffusion was needed.
    pub steady_rho: Vec<f64>,
    pub beta: f64,
}

impl RegionBuild {
    /// `coord... in_region steady_rho` per node.
    pub fn dump(&self, lat: &Lattice) -> String {
        let mut out = String::new();
        for j in 0..lat.len() {
            for c in lat.coords(j) {
                let _ = write!(out, "{c} ");
            }
            let _ = writeln!(
                out,
                "{} {}",
                u8::from(self.region.contains_node(j)),
                self.steady_rho[j]
            );
        }
        out
    }
}

/// Alternate gradient and diffusion rounds from `start` until `target` is covered.
pub fn build_rf(
    start: usize,
    target: usize,
    lat: &Lattice,
    opts: RegionOptions,
) -> Result<RegionBuild, FpeError> {
    let p = lat.potential();
    let range = p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - p.iter().copied().fold(f64::INFINITY, f64::min);
    let beta = opts.beta.unwrap_or(range / 10.0);
    let mut region = Region::empty(lat);
    let mut rounds = Vec::new();
    let mut steady_rho = DensityField::delta(lat.len(), start).rho;
    let mut x = start;
    for _ in 0..lat.len().max(1) {
        let before = region.len();
        let grad = gradient_region(x, lat, opts.evolve)?;
        region.union(lat, &grad);
        let mut round = Round {
            gradient_start: x,
            gradient_nodes: region.len() - before,
            diffusion_nodes: 0,
        };
        if region.contains_node(target) {
            if rounds.is_empty() {
                steady_rho = evolve_to_steady(
                    &DensityField::delta(lat.len(), start),
                    lat,
                    &ProjectionWeights::gradient(lat),
                    opts.evolve,
                )?
                .field
                .rho;
            }
            rounds.push(round);
            return Ok(RegionBuild {
                region,
                rounds,
                steady_rho,
                beta,
            });
        }
        if !(beta > 0.0) {
            return Err(FpeError::Structural {
                rounds: rounds.len() + 1,
                reason: "flat potential leaves no diffusion strength".into(),
            });
        }
        let diff = diffusion_region(&region, lat, beta, opts.epsilon, opts.evolve)?;
        for &j in &diff.layers {
            region.insert(lat, j);
        }
        round.diffusion_nodes = diff.layers.len();
        steady_rho = diff.steady;
        rounds.push(round);
        if region.contains_node(target) {
            return Ok(RegionBuild {
                region,
                rounds,
                steady_rho,
                beta,
            });
        }
        match diff.next_start {
            Some(next) => x = next,
            None => {
                return Err(FpeError::Structural {
                    rounds: rounds.len(),
                    reason: "target is not reachable on the lattice from the start".into(),
                })
            }
        }
    }
    Err(FpeError::Structural {
        rounds: rounds.len(),
        reason: "round limit reached".into(),
    })
}
