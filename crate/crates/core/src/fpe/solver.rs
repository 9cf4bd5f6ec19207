use crate::error::FpeError;

use super::lattice::Lattice;

/// Probability mass per lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub rho: Vec<f64>,
    pub beta: f64,
}

impl DensityField {
    pub fn new(rho: Vec<f64>, beta: f64) -> Result<Self, FpeError> {
        if beta < 0.0 || !beta.is_finite() {
            return Err(FpeError::InvalidLattice(format!(
                "beta must be finite and non-negative, got {beta}"
            )));
        }
        if beta > 0.0 {
            if let Some(j) = rho.iter().position(|&r| !(r > 0.0)) {
                return Err(FpeError::ZeroDensity(j));
            }
        }
        if let Some(j) = rho.iter().position(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(FpeError::CflViolation {
                node: j,
                mass: rho[j],
                dt: 0.0,
            });
        }
        Ok(Self { rho, beta })
    }

    /// Unit mass at `node`.
    pub fn delta(len: usize, node: usize) -> Self {
        let mut rho = vec![0.0; len];
        rho[node] = 1.0;
        Self { rho, beta: 0.0 }
    }

    pub fn uniform(len: usize, beta: f64) -> Self {
        Self {
            rho: vec![1.0 / len as f64; len],
            beta,
        }
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// `F_j = dF/d rho_j`.
    pub fn chemical_potential(&self, lat: &Lattice) -> Vec<f64> {
        let p = lat.potential();
        if self.beta == 0.0 {
            return p.to_vec();
        }
        p.iter()
            .zip(&self.rho)
            .map(|(pj, rj)| pj + self.beta * (rj.ln() + 1.0))
            .collect()
    }
}

/// Edge weights `d_jk`, stored alongside each node's neighbour list.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionWeights {
    d: Vec<Vec<f64>>,
}

impl ProjectionWeights {
    /// Every edge active.
    pub fn diffusion(lat: &Lattice) -> Self {
        Self {
            d: (0..lat.len())
                .map(|j| vec![1.0; lat.neighbors(j).len()])
                .collect(),
        }
    }

    /// Only steepest-descent edges active. An edge takes the value chosen by
    /// its higher-potential endpoint.
    pub fn gradient(lat: &Lattice) -> Self {
        let steep: Vec<Vec<usize>> = (0..lat.len()).map(|j| lat.steepest(j)).collect();
        let p = lat.potential();
        let d = (0..lat.len())
            .map(|j| {
                lat.neighbors(j)
                    .iter()
                    .map(|&k| {
                        let on = if p[j] > p[k] {
                            steep[j].contains(&k)
                        } else if p[k] > p[j] {
                            steep[k].contains(&j)
                        } else {
                            false
                        };
                        if on {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { d }
    }

    /// Weight of the edge between `j` and its `idx`-th neighbour.
    pub fn get(&self, j: usize, idx: usize) -> f64 {
        self.d[j][idx]
    }
}

/// `sum_j p_j rho_j + beta rho_j log rho_j`, with `0 log 0 = 0`.
pub fn free_energy(f: &DensityField, lat: &Lattice) -> f64 {
    lat.potential()
        .iter()
        .zip(&f.rho)
        .map(|(p, &r)| {
            let entropy = if f.beta > 0.0 && r > 0.0 {
                f.beta * r * r.ln()
            } else {
                0.0
            };
            p * r + entropy
        })
        .sum()
}

/// Inflow and outflow coefficient per node: `d rho_j / dt = in_j - rho_j * out_j`.
fn fluxes(f: &DensityField, lat: &Lattice, w: &ProjectionWeights) -> (Vec<f64>, Vec<f64>) {
    let big_f = f.chemical_potential(lat);
    let inv = 1.0 / (lat.spacing() * lat.spacing());
    let mut inflow = vec![0.0; lat.len()];
    let mut out = vec![0.0; lat.len()];
    for j in 0..lat.len() {
        for (idx, &k) in lat.neighbors(j).iter().enumerate() {
            let d = w.get(j, idx);
            if d == 0.0 {
                continue;
            }
            let diff = big_f[k] - big_f[j];
            if diff > 0.0 {
                inflow[j] += diff * f.rho[k] * d;
            } else if diff < 0.0 {
                out[j] -= diff * d;
            }
        }
        inflow[j] *= inv;
        out[j] *= inv;
    }
    (inflow, out)
}

/// Time derivative of the upwind scheme at every node.
pub fn rate(f: &DensityField, lat: &Lattice, w: &ProjectionWeights) -> Vec<f64> {
    let (inflow, out) = fluxes(f, lat, w);
    inflow
        .iter()
        .zip(&out)
        .zip(&f.rho)
        .map(|((i, o), r)| i - r * o)
        .collect()
}

/// Largest step keeping the explicit scheme positive and bounded, with a 0.9
/// safety factor.
///
/// Bound one limits outflow from each node, bound two limits inflow into it.
/// When neither constrains the step it falls back to `dx^2`. For `beta > 0`
/// the step is additionally held below the linearised diffusion limit, since
/// both bounds grow without limit as the field approaches equilibrium.
pub fn cfl_dt(f: &DensityField, lat: &Lattice, w: &ProjectionWeights) -> f64 {
    let big_f = f.chemical_potential(lat);
    // `1 - rho_j` is the mass held elsewhere; for the heaviest node it is summed
    // directly, since the subtraction cancels once that node holds nearly everything
    let heaviest = (0..f.rho.len()).max_by(|&a, &b| f.rho[a].total_cmp(&f.rho[b]));
    let rest: f64 = f
        .rho
        .iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != heaviest)
        .map(|(_, r)| r)
        .sum();
    let mut out_max: f64 = 0.0;
    let mut bound2 = f64::INFINITY;
    for j in 0..lat.len() {
        let mut out = 0.0;
        let mut inflow = 0.0;
        for (idx, &k) in lat.neighbors(j).iter().enumerate() {
            let d = w.get(j, idx);
            out += (big_f[j] - big_f[k]).max(0.0) * d;
            inflow += (big_f[k] - big_f[j]).max(0.0) * f.rho[k] * d;
        }
        out_max = out_max.max(out);
        if inflow > 0.0 {
            let free = if Some(j) == heaviest {
                rest
            } else {
                1.0 - f.rho[j]
            };
            bound2 = bound2.min(free / inflow);
        }
    }
    let bound1 = if out_max > 0.0 {
        1.0 / out_max
    } else {
        f64::INFINITY
    };
    let dx2 = lat.spacing() * lat.spacing();
    let bound = bound1.min(bound2);
    let mut dt = if bound.is_finite() {
        0.9 * bound * dx2
    } else {
        dx2
    };
    if f.beta > 0.0 {
        dt = dt.min(diffusion_limit(f.beta, lat));
    }
    dt
}

fn diffusion_limit(beta: f64, lat: &Lattice) -> f64 {
    let dx2 = lat.spacing() * lat.spacing();
    let deg = lat.max_degree().max(1) as f64;
    let growth = (lat.max_edge_drop() / beta).min(50.0).exp();
    dx2.min(0.9 * dx2 / (deg * beta * growth))
}

/// One forward-Euler step of size `dt`.
pub fn fpe_step(
    f: &DensityField,
    lat: &Lattice,
    w: &ProjectionWeights,
    dt: f64,
) -> Result<DensityField, FpeError> {
    let (inflow, out) = fluxes(f, lat, w);
    step_with(f, &inflow, &out, dt)
}

fn step_with(
    f: &DensityField,
    inflow: &[f64],
    out: &[f64],
    dt: f64,
) -> Result<DensityField, FpeError> {
    // factored so that tiny masses cannot round below zero
    let rho: Vec<f64> = f
        .rho
        .iter()
        .zip(inflow)
        .zip(out)
        .map(|((x, i), o)| x * (1.0 - dt * o) + dt * i)
        // without diffusion, subnormal tails are flushed so drained nodes reach zero
        .map(|m| {
            if f.beta == 0.0 && m > 0.0 && m < f64::MIN_POSITIVE {
                0.0
            } else {
                m
            }
        })
        .collect();
    // negative or vanishing mass first, overflow second
    let low = |m: f64| !m.is_finite() || m < 0.0 || (f.beta > 0.0 && m == 0.0);
    let high = |m: f64| m > 1.0 + 1e-12;
    for bad in [&low as &dyn Fn(f64) -> bool, &high] {
        if let Some(node) = rho.iter().position(|&m| bad(m)) {
            return Err(FpeError::CflViolation {
                node,
                mass: rho[node],
                dt,
            });
        }
    }
    // roundoff above one is within the overflow tolerance checked above
    let rho = rho.into_iter().map(|m| m.min(1.0)).collect();
    Ok(DensityField { rho, beta: f.beta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Stop once `max |d rho / dt|` drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 1_000_000,
        }
    }
}

/// Final state of an evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Steady {
    pub field: DensityField,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-step view handed to [`evolve_with`] observers.
pub struct StepInfo<'a> {
    pub iteration: usize,
    pub field: &'a DensityField,
    pub rate: &'a [f64],
    pub dt: f64,
}

/// Evolve with adaptive CFL steps until the residual falls below `opts.tol`.
/// A step that would raise the free energy is halved until it does not.
/// `observe` sees every state together with its rate, before the step taken
/// from it (and once more for the final state).
pub fn evolve_with(
    f: &DensityField,
    lat: &Lattice,
    w: &ProjectionWeights,
    opts: EvolveOptions,
    mut observe: impl FnMut(&StepInfo<'_>),
) -> Result<Steady, FpeError> {
    if !(opts.tol > 0.0) {
        return Err(FpeError::InvalidLattice(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let mut field = f.clone();
    for iteration in 0..=opts.max_iters {
        let (inflow, out) = fluxes(&field, lat, w);
        let r: Vec<f64> = inflow
            .iter()
            .zip(&out)
            .zip(&field.rho)
            .map(|((i, o), x)| i - x * o)
            .collect();
        let residual = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut dt = cfl_dt(&field, lat, w);
        let mut next = None;
        if residual >= opts.tol && iteration < opts.max_iters {
            // far from equilibrium a full CFL step can overshoot; halve until F does not rise
            let fe = free_energy(&field, lat);
            let slack = 1e-14 * (1.0 + fe.abs());
            let mut cand = step_with(&field, &inflow, &out, dt)?;
            for _ in 0..60 {
                if free_energy(&cand, lat) <= fe + slack {
                    break;
                }
                dt *= 0.5;
                cand = step_with(&field, &inflow, &out, dt)?;
            }
            next = Some(cand);
        }
        observe(&StepInfo {
            iteration,
            field: &field,
            rate: &r,
            dt,
        });
        if residual < opts.tol {
            return Ok(Steady {
                field,
                iterations: iteration,
                residual,
            });
        }
        if iteration == opts.max_iters {
            return Err(FpeError::NonConvergence {
                iterations: iteration,
                residual,
            });
        }
        field = next.expect("a step is prepared whenever the loop continues");
    }
    unreachable!("loop returns on its last iteration")
}

pub fn evolve_to_steady(
    f: &DensityField,
    lat: &Lattice,
    w: &ProjectionWeights,
    opts: EvolveOptions,
) -> Result<Steady, FpeError> {
    evolve_with(f, lat, w, opts, |_| {})
}
