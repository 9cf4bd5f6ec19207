mod common;

use std::sync::Arc;

use common::{bx, c, unit_square};
use fp_planner::fpe::{
    cfl_dt, evolve_to_steady, evolve_with, fpe_step, free_energy, gradient_region, DensityField,
    EvolveOptions, Lattice, ProjectionWeights,
};
use fp_planner::{GroundTruth, KnownEnvironment, PotentialField};
use proptest::prelude::*;

fn grid(n: usize, target: (f64, f64), walls: &[(f64, f64, f64, f64)]) -> Lattice {
    let prims = walls
        .iter()
        .map(|&(x, y, w, h)| bx(x, y, x + w, y + h, true))
        .collect();
    let env =
        KnownEnvironment::fully_known(Arc::new(GroundTruth::new(unit_square(), prims).unwrap()));
    let pot = PotentialField::new(c(&[target.0, target.1]));
    Lattice::from_environment(&env, &c(&[0.0, 0.0]), 1.0 / (n - 1) as f64, &pot).unwrap()
}

fn walls() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.1..0.8f64, 0.1..0.8f64, 0.05..0.2f64, 0.05..0.2f64), 0..4)
}

fn weights(lat: &Lattice, beta: f64) -> ProjectionWeights {
    if beta > 0.0 {
        ProjectionWeights::diffusion(lat)
    } else {
        ProjectionWeights::gradient(lat)
    }
}

/// Positive random density of unit mass.
fn density(raw: &[f64], len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|j| 0.01 + raw[j % raw.len()]).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cfl_steps_conserve_mass_and_stay_positive(
        t in (0.0..1.0f64, 0.0..1.0f64),
        w in walls(),
        beta in prop_oneof![Just(0.0), 0.02..0.5f64],
        raw in prop::collection::vec(0.0..1.0f64, 1..50),
    ) {
        let lat = grid(12, t, &w);
        prop_assume!(!lat.is_empty());
        let pw = weights(&lat, beta);
        let mut f = DensityField::new(density(&raw, lat.len()), beta).unwrap();
        for _ in 0..300 {
            f = fpe_step(&f, &lat, &pw, cfl_dt(&f, &lat, &pw)).unwrap();
            prop_assert!((f.mass() - 1.0).abs() < 1e-12);
            prop_assert!(f.rho.iter().all(|&r| (0.0..=1.0).contains(&r)));
        }
    }

    #[test]
    fn free_energy_never_rises(
        t in (0.0..1.0f64, 0.0..1.0f64),
        w in walls(),
        beta in prop_oneof![Just(0.0), 0.02..0.5f64],
        raw in prop::collection::vec(0.0..1.0f64, 1..50),
    ) {
        let lat = grid(12, t, &w);
        prop_assume!(!lat.is_empty());
        let f = DensityField::new(density(&raw, lat.len()), beta).unwrap();
        let mut prev = f64::INFINITY;
        let mut rise = f64::NEG_INFINITY;
        let opts = EvolveOptions { tol: 1e-10, max_iters: 3000 };
        let _ = evolve_with(&f, &lat, &weights(&lat, beta), opts, |s| {
            let fe = free_energy(s.field, &lat);
            rise = rise.max(fe - prev);
            prev = fe;
        });
        prop_assert!(rise <= 1e-12, "free energy rose by {}", rise);
    }

    #[test]
    fn zero_diffusion_chain_settles_on_local_minima(p in Just((0..14).map(f64::from).collect::<Vec<_>>()).prop_shuffle(), n in 2usize..15) {
        let lat = Lattice::chain(1.0, p[..n].to_vec()).unwrap();
        let f = DensityField::uniform(lat.len(), 0.0);
        let opts = EvolveOptions { tol: f64::from_bits(1), max_iters: 2_000_000 };
        let s = evolve_to_steady(&f, &lat, &ProjectionWeights::gradient(&lat), opts).unwrap();
        for j in 0..lat.len() {
            if s.field.rho[j] > 0.0 {
                prop_assert!(lat.is_local_min(j));
            }
        }
        prop_assert!((s.field.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_region_is_downhill(t in (0.0..1.0f64, 0.0..1.0f64), w in walls(), start in any::<prop::sample::Index>()) {
        let lat = grid(15, t, &w);
        prop_assume!(!lat.is_empty());
        let s = start.index(lat.len());
        let r = gradient_region(s, &lat, EvolveOptions::default()).unwrap();
        let p = lat.potential();
        prop_assert!(r.contains_node(s));
        for j in r.nodes() {
            prop_assert!(p[j] <= p[s]);
            prop_assert!(r.contains_point(lat.coords(j)));
        }
    }
}

#[test]
fn gibbs_limit_up_to_fifty_by_fifty() {
    for (n, beta) in [(10, 0.3), (30, 0.2), (50, 0.25)] {
        let lat = grid(n, (0.37, 0.61), &[(0.2, 0.2, 0.15, 0.3)]);
        let f = DensityField::uniform(lat.len(), beta);
        let s = evolve_to_steady(
            &f,
            &lat,
            &ProjectionWeights::diffusion(&lat),
            EvolveOptions::default(),
        )
        .unwrap();
        // the Gibbs field is taken over the connected lattice, which this wall leaves whole
        let w: Vec<f64> = (0..lat.len())
            .map(|j| {
                let x = lat.coords(j);
                (-(x[0] - 0.37).hypot(x[1] - 0.61) / beta).exp()
            })
            .collect();
        let z: f64 = w.iter().sum();
        let err = s
            .field
            .rho
            .iter()
            .zip(&w)
            .map(|(r, g)| (r - g / z).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{n}x{n}: {err}");
    }
}
