use std::f64::consts::PI;

use proptest::prelude::*;
use sasdp::privacy::{
    calibrate_gamma, delta_for_epsilon, estimate_epsilon, privacy_loss_scalar, privacy_loss_vector,
    privacy_loss_vector_bound, Epsilon, SearchConfig,
};
use sasdp::stable::{EvalConfig, StableParams};

fn sas(alpha: f64, gamma: f64) -> StableParams {
    StableParams::new(alpha, gamma, 0.0).unwrap()
}

fn epsilon(alpha: f64, gamma: f64, sensitivity: f64) -> f64 {
    let search = SearchConfig::for_problem(gamma, sensitivity);
    let report =
        estimate_epsilon(alpha, gamma, sensitivity, &search, &EvalConfig::default()).unwrap();
    report.epsilon.value().expect("finite budget")
}

fn loss(alpha: f64, x: f64) -> f64 {
    privacy_loss_scalar(x, &sas(alpha, 1.0), 0.0, 1.0, &EvalConfig::default()).unwrap()
}

/// Cauchy budget: the loss ln((1 + (x-d)^2) / (1 + x^2)) peaks at 2 asinh(d/2).
fn cauchy_budget(standardized_sensitivity: f64) -> f64 {
    2.0 * (0.5 * standardized_sensitivity).asinh()
}

#[test]
fn cauchy_budget_matches_stationary_point() {
    let e = epsilon(1.0, 1.0, 1.0);
    assert!((e - 2.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-4);
    for r in [0.25, 0.5, 2.0, 4.0] {
        assert!(
            (epsilon(1.0, 1.0, r) - cauchy_budget(r)).abs() < 1e-6,
            "r = {r}"
        );
    }
}

#[test]
fn argmax_sits_at_stationary_point() {
    let search = SearchConfig::for_problem(1.0, 1.0);
    let r = estimate_epsilon(1.0, 1.0, 1.0, &search, &EvalConfig::default()).unwrap();
    let x = r.argmax_x.unwrap();
    // roots of x^2 - x - 1 = 0; the positive loss is at (1 - sqrt 5) / 2
    assert!((x - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-3, "argmax {x}");
}

#[test]
fn heavy_tailed_losses_are_bounded_by_the_budget() {
    for alpha in [1.0, 1.25, 1.5, 1.75] {
        let eps = epsilon(alpha, 1.0, 1.0);
        let mut xs: Vec<f64> = (0..=4000).map(|i| -1e4 + 5.0 * i as f64).collect();
        xs.extend((0..=400).map(|i| -10.0 + 0.05 * i as f64));
        for x in xs {
            let l = loss(alpha, x).abs();
            assert!(
                l <= eps + 1e-6,
                "alpha {alpha}, x {x}: |loss| {l} > eps {eps}"
            );
        }
    }
}

#[test]
fn heavy_tailed_losses_decay() {
    for alpha in [1.0, 1.25, 1.5, 1.75] {
        for sign in [1.0, -1.0] {
            let near = loss(alpha, sign * 1e3).abs();
            let far = loss(alpha, sign * 1e4).abs();
            assert!(near < 0.05 && far < 0.05, "alpha {alpha}: {near}, {far}");
            assert!(far < near);
        }
    }
}

#[test]
fn budget_is_scale_invariant() {
    for alpha in [1.0, 1.5] {
        let base = epsilon(alpha, 1.0, 1.0);
        for c in [0.5, 2.0, 10.0] {
            let scaled = epsilon(alpha, c, c);
            assert!(
                (scaled - base).abs() < 2e-6,
                "alpha {alpha}, c {c}: {scaled} vs {base}"
            );
        }
    }
}

#[test]
fn budget_increases_with_standardized_sensitivity() {
    for alpha in [1.0, 1.3, 1.6, 1.9] {
        let values: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&r| epsilon(alpha, 1.0, r))
            .collect();
        assert!(
            values.windows(2).all(|w| w[0] < w[1]),
            "alpha {alpha}: {values:?}"
        );
    }
}

#[test]
fn gaussian_is_unbounded_with_linear_loss() {
    let search = SearchConfig::for_problem(1.0, 1.0);
    let r = estimate_epsilon(2.0, 1.0, 1.0, &search, &EvalConfig::default()).unwrap();
    assert_eq!(r.epsilon, Epsilon::Unbounded);
    assert!(r.argmax_x.is_none());
    // exact loss for variance 2 and shift 1 is (1 - 2x) / 4
    let l: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&x| loss(2.0, x))
        .collect();
    for (x, v) in [10.0, 100.0, 1000.0].iter().zip(&l) {
        assert!((v - (1.0 - 2.0 * x) / 4.0).abs() < 1e-9);
    }
    for w in l.windows(2) {
        assert!(((w[1] / w[0]) / 10.0 - 1.0).abs() < 0.05);
    }
}

#[test]
fn calibration_inverts_the_budget() {
    for (alpha, target) in [(1.0, 0.1), (1.0, 3.0), (1.3, 0.5), (1.5, 1.0), (1.8, 3.0)] {
        let g = calibrate_gamma(alpha, 2.0, target, 1e-7).unwrap();
        assert!(
            (epsilon(alpha, g, 2.0) - target).abs() < 1e-5,
            "alpha {alpha}, target {target}"
        );
    }
    let g = calibrate_gamma(1.0, 1.0, 0.962_424, 1e-7).unwrap();
    assert!((g - 1.0).abs() < 1e-4);
    assert!(calibrate_gamma(2.0, 1.0, 1.0, 1e-7).is_err());
}

/// Fine-grid trapezoid integration of max(p1 - e^eps p2, 0) for N(0, s^2) vs N(d, s^2).
fn gaussian_delta_oracle(sigma: f64, d: f64, eps: f64) -> f64 {
    let pdf = |x: f64, m: f64| {
        (-(x - m) * (x - m) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
    };
    let (lo, hi, n) = (-40.0, 40.0, 800_000);
    let h = (hi - lo) / n as f64;
    let f = |x: f64| (pdf(x, 0.0) - eps.exp() * pdf(x, d)).max(0.0);
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (0.5 * (f(lo) + f(hi)) + inner)
}

#[test]
fn gaussian_delta_matches_grid_oracle() {
    let sigma = 2f64.sqrt();
    let p = sas(2.0, sigma / 2f64.sqrt());
    let delta = delta_for_epsilon(&p, 1.0, 1.0, &EvalConfig::default()).unwrap();
    let oracle = gaussian_delta_oracle(sigma, 1.0, 1.0);
    assert!(delta > 0.0);
    assert!(
        (delta / oracle - 1.0).abs() < 0.01,
        "delta {delta}, oracle {oracle}"
    );
}

#[test]
fn delta_vanishes_at_the_budget() {
    let cfg = EvalConfig::default();
    for alpha in [1.0, 1.5, 1.8] {
        let eps = epsilon(alpha, 1.0, 1.0);
        let p = sas(alpha, 1.0);
        assert!(delta_for_epsilon(&p, 1.0, eps, &cfg).unwrap().abs() < 1e-6);
        assert!(delta_for_epsilon(&p, 1.0, eps + 0.5, &cfg).unwrap().abs() < 1e-6);
        let mut previous = f64::INFINITY;
        for k in 0..=10 {
            let e = eps * k as f64 / 10.0;
            let d = delta_for_epsilon(&p, 1.0, e, &cfg).unwrap();
            assert!(
                d <= previous + 1e-9,
                "alpha {alpha}: delta not monotone at eps {e}"
            );
            previous = d;
        }
        assert!(delta_for_epsilon(&p, 1.0, 0.5 * eps, &cfg).unwrap() > 0.0);
    }
}

#[test]
fn vector_loss_and_its_bound() {
    let cfg = EvalConfig::default();
    let p = sas(1.5, 1.0);
    let x = [0.3, -2.0, 5.0];
    let f1 = [0.0, 1.0, 0.0];
    let f2 = [1.0, 0.0, 0.5];
    let exact = privacy_loss_vector(&x, &p, &f1, &f2, &cfg).unwrap();
    let sum: f64 = (0..3)
        .map(|i| privacy_loss_scalar(x[i], &p, f1[i], f2[i], &cfg).unwrap())
        .sum();
    assert!((exact - sum).abs() < 1e-15);
    assert!(privacy_loss_vector_bound(&x, &p, &f1, &f2, &cfg).unwrap() >= exact.abs());
    assert!(privacy_loss_vector(&x, &p, &f1, &f2[..2], &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_antisymmetric(alpha in 1.0f64..=2.0, x in -200.0f64..200.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let cfg = EvalConfig::default();
        let p = sas(alpha, 1.0);
        let forward = privacy_loss_scalar(x, &p, a, b, &cfg).unwrap();
        let backward = privacy_loss_scalar(x, &p, b, a, &cfg).unwrap();
        prop_assert_eq!(forward, -backward);
    }

    #[test]
    fn loss_vanishes_for_equal_neighbours(alpha in 1.0f64..=2.0, x in -1e3f64..1e3, a in -5.0f64..5.0) {
        let cfg = EvalConfig::default();
        prop_assert_eq!(privacy_loss_scalar(x, &sas(alpha, 1.0), a, a, &cfg).unwrap(), 0.0);
    }
}
