//! The SMO solver against an independent projected-gradient solution of the
//! same dual.

mod support;

use activo_core::rng::RngStream;
use activo_core::weak::{fit_weak_raw, WeakHyperparams};
use support::svr_oracle;

fn check(inputs: &[Vec<f64>], fitness: &[f64]) -> (f64, f64) {
    let hp = WeakHyperparams::default();
    let model = fit_weak_raw(inputs, fitness, &hp).unwrap();
    let gamma = 1.0 / inputs[0].len() as f64;
    let k = svr_oracle::gram(inputs, gamma);
    let y = svr_oracle::standardize(fitness);
    let oracle = svr_oracle::solve(&k, &y, hp.cost, hp.nu, 1500);
    let recomputed = svr_oracle::objective(&k, &y, &model.dual.alpha, &model.dual.alpha_star);
    assert!((recomputed - model.dual.objective).abs() < 1e-9);
    (model.dual.objective, oracle.objective)
}

#[test]
fn linear_target_matches_oracle() {
    let mut r = RngStream::new(2024, 0).rng();
    let x: Vec<Vec<f64>> = (0..20).map(|_| r.unit_vector(2)).collect();
    let y: Vec<f64> = x.iter().map(|u| u[0] + u[1]).collect();
    let (smo, oracle) = check(&x, &y);
    assert!((smo - oracle).abs() < 1e-4, "smo {smo} oracle {oracle}");
}

#[test]
fn random_targets_match_oracle() {
    for seed in 0..3 {
        let mut r = RngStream::new(seed, 3).rng();
        let x: Vec<Vec<f64>> = (0..20).map(|_| r.unit_vector(3)).collect();
        let y: Vec<f64> = (0..20).map(|_| r.uniform(-5.0, 5.0)).collect();
        let (smo, oracle) = check(&x, &y);
        assert!((smo - oracle).abs() < 1e-4, "seed {seed}: smo {smo} oracle {oracle}");
    }
}

#[test]
fn oracle_projection_is_feasible() {
    let a = vec![0.9, -0.3, 0.5, 2.0];
    let b = vec![0.1, 0.7, -1.0, 0.4];
    let (x, y) = svr_oracle::project(&a, &b, 0.8, 1.0);
    let diff: f64 = x.iter().sum::<f64>() - y.iter().sum::<f64>();
    let total: f64 = x.iter().chain(&y).sum();
    assert!(diff.abs() < 1e-9);
    assert!(total <= 1.0 + 1e-9);
    assert!(x.iter().chain(&y).all(|&v| (0.0..=0.8).contains(&v)));
}
