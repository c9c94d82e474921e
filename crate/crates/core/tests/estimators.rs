use std::sync::Arc;

use jaguar::estimators::{full_approximation, sega_point, EstimatorState};
use jaguar::objectives::{Objective, Quadratic};
use jaguar::oracle::{NoiseModel, ZeroOrderOracle};
use jaguar::rng::{Stream, Streams};
use jaguar::theory_checks::{full_approximation_errors, log_log_slope, sega_unbiasedness};
use jaguar::vector;
use rand::Rng;

fn dense_quadratic(d: usize, seed: u64) -> Quadratic {
    let mut rng = Streams::new(seed).rng(Stream::Harness);
    let m: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (0..d).map(|k| m[k * d + i] * m[k * d + j]).sum::<f64>() / d as f64;
        }
        a[i * d + i] += 0.1;
    }
    let b = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Quadratic::new(a, b).unwrap()
}

#[test]
fn full_approximation_is_exact_for_dense_quadratics() {
    let q = dense_quadratic(12, 1);
    let x: Vec<f64> = (0..12).map(|j| (j as f64).cos()).collect();
    let grad = q.gradient(&x).unwrap();
    let mut oracle = ZeroOrderOracle::new(Arc::new(q), NoiseModel::None, 0);
    let est = full_approximation(&mut oracle, &x, 1e-2).unwrap();
    for (e, g) in est.iter().zip(&grad) {
        assert!((e - g).abs() <= 1e-10);
    }
}

#[test]
fn memory_error_contracts_at_frozen_point() {
    let d = 10;
    let q: Arc<dyn Objective> = Arc::new(dense_quadratic(d, 2));
    let x = vec![0.3; d];
    let grad = q.gradient(&x).unwrap();
    let steps = 40 * d;
    let reps = 400;
    let mut mean = vec![0.0; steps + 1];
    let mut rng = Streams::new(7).rng(Stream::Estimator);
    for _ in 0..reps {
        let mut oracle = ZeroOrderOracle::new(q.clone(), NoiseModel::None, 0);
        let mut state = EstimatorState::from_memory(vec![0.0; d], None, 1e-3).unwrap();
        mean[0] += vector::norm_sq(&grad);
        for slot in mean.iter_mut().skip(1) {
            let h = state.jaguar_step(&mut oracle, &x, &mut rng).unwrap();
            *slot += vector::dist(h, &grad).powi(2);
        }
    }
    let ks: Vec<f64> = (0..=steps).filter(|&k| mean[k] > 1e-12 * mean[0]).map(|k| k as f64).collect();
    let ys: Vec<f64> = ks.iter().map(|&k| mean[k as usize]).collect();
    // fit ln mean = a + k ln ratio
    let n = ks.len() as f64;
    let mk = ks.iter().sum::<f64>() / n;
    let my = ys.iter().map(|y| y.ln()).sum::<f64>() / n;
    let slope = ks.iter().zip(&ys).map(|(k, y)| (k - mk) * (y.ln() - my)).sum::<f64>()
        / ks.iter().map(|k| (k - mk).powi(2)).sum::<f64>();
    let ratio = slope.exp();
    assert!(ratio <= 1.0 - 1.0 / (2.0 * d as f64) + 0.01, "{ratio}");
}

#[test]
fn sega_point_is_unbiased() {
    let d = 6;
    let q: Arc<dyn Objective> = Arc::new(dense_quadratic(d, 3));
    let x = vec![0.2; d];
    let h: Vec<f64> = (0..d).map(|j| j as f64).collect();
    let mc = sega_unbiasedness(q, &x, &h, 1e-3, 50_000, 1).unwrap();
    assert!(mc.max_z() <= 3.0, "{mc:?}");
    // and with exact memory the point has zero variance
    let rho = sega_point(&mc.target, 2, mc.target[2]);
    for (r, t) in rho.iter().zip(&mc.target) {
        assert!((r - t).abs() <= 1e-14);
    }
}

#[test]
fn full_approximation_error_scales_with_tau_squared() {
    let taus = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4];
    let errs = full_approximation_errors(&[1.0, -2.0, 0.5, 4.0], &[0.3, 1.0, -0.7, 0.1], &taus).unwrap();
    let slope = log_log_slope(&taus, &errs);
    assert!((slope - 2.0).abs() <= 0.2, "{slope}");
}
