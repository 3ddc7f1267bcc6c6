//! Benchmarks for the closure scan, the amplitude right-hand side and one
//! split-step solve. Inputs are built by the `*_input` functions so the
//! benchmarked code and the sanity tests share them.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use wkb_core::lattice::{close_under_resonances, ClosureLimits, Interactions, ModeSet, WaveVector};
use wkb_core::pipeline::{assemble_uapp, default_grid};
use wkb_core::profile::{nonlinear_rhs_torus, ProfileStateTorus};
use wkb_core::spectral::{solve, GridField, SolverConfig};
use wkb_core::C64;

/// Square lattice patch {0..side}² as initial vectors.
pub fn closure_input(side: i64) -> Vec<WaveVector> {
    (0..side)
        .flat_map(|a| (0..side).map(move |b| WaveVector::new(vec![a, b])))
        .collect()
}

/// A 1-D mode set of `len` consecutive vectors with deterministic amplitudes.
pub fn rhs_input(len: i64, sigma: u32) -> (ModeSet, ProfileStateTorus) {
    let modes = ModeSet::from_initial(1, sigma, (0..len).map(|k| WaveVector::new(vec![k])).collect())
        .expect("valid modes");
    let amps = (0..len)
        .map(|k| C64::from_polar(1.0 / (1.0 + k as f64), 0.7 * k as f64))
        .collect();
    (modes, ProfileStateTorus { amps, t: 0.0 })
}

/// WKB initial datum for three 1-D modes at ε and its solver configuration.
pub fn solve_input(inv_eps: u32) -> (GridField, SolverConfig) {
    let eps = 1.0 / f64::from(inv_eps);
    let (modes, state) = rhs_input(3, 1);
    let grid = default_grid(&modes, eps).expect("grid");
    let u0 = assemble_uapp(&state, &modes, eps, grid).expect("assembles");
    let cfg = SolverConfig {
        eps,
        lambda: 1.0,
        sigma: 1,
        dt: eps / 100.0,
        n: grid.n,
        t_final: 0.1,
    };
    (u0, cfg)
}

pub fn benchmarks(c: &mut Criterion) {
    let mut g = c.benchmark_group("closure");
    for side in [2, 3] {
        let initial = closure_input(side);
        let limits = ClosureLimits {
            max_generations: 2,
            max_sup_norm: 16,
        };
        g.bench_with_input(BenchmarkId::from_parameter(side), &initial, |b, v| {
            b.iter(|| close_under_resonances(black_box(v), 1, limits).expect("closes"))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("rhs_torus");
    for (len, sigma) in [(16, 1), (8, 2)] {
        let (modes, state) = rhs_input(len, sigma);
        let inter = Interactions::enumerate(&modes);
        g.bench_function(format!("{len}_modes_sigma_{sigma}"), |b| {
            b.iter(|| nonlinear_rhs_torus(black_box(&state), &modes, &inter, 1.0).expect("rhs"))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("spectral_solve");
    g.sample_size(10);
    for inv in [16, 64] {
        let (u0, cfg) = solve_input(inv);
        g.bench_function(format!("eps_1_over_{inv}"), |b| {
            b.iter(|| solve(black_box(&u0), &cfg, &[cfg.t_final]).expect("solves"))
        });
    }
    g.finish();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_well_formed() {
        assert_eq!(closure_input(3).len(), 9);
        let (modes, state) = rhs_input(8, 2);
        let inter = Interactions::enumerate(&modes);
        assert_eq!(nonlinear_rhs_torus(&state, &modes, &inter, 1.0).unwrap().len(), 8);
        let (u0, cfg) = solve_input(16);
        cfg.validate().unwrap();
        assert_eq!(u0.n, cfg.n);
    }
}
