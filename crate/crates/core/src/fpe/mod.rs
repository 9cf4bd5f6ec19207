//! Fokker-Planck flow on the feasible lattice and the search-region
//! construction built from it.
//!
//! Densities evolve under an upwind finite-volume scheme with forward Euler
//! steps sized by the positivity bounds. Greedy rounds (no diffusion) follow
//! the steepest-descent edges; diffusive rounds spread toward the Gibbs
//! density and grow the region out of local basins.

mod lattice;
mod region;
mod solver;

pub use lattice::{Lattice, MAX_LATTICE_DIM};
pub use region::{
    build_rf, contains_path, diffusion_region, escape_start, gradient_region, DiffusionRound,
    Region, RegionBuild, RegionOptions, Round, RATE_THRESHOLD,
};
pub use solver::{
    cfl_dt, evolve_to_steady, evolve_with, fpe_step, free_energy, rate, DensityField,
    EvolveOptions, ProjectionWeights, Steady, StepInfo,
};
