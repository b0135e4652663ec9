use std::f64::consts::PI;

use proptest::prelude::*;
use sasdp::stable::{
    cdf, density, density_peak_bound, density_quadrature, density_tail_series, survival,
    EvalConfig, StableParams,
};

fn sas(alpha: f64, gamma: f64, mu: f64) -> StableParams {
    StableParams::new(alpha, gamma, mu).unwrap()
}

/// Trapezoid rule on `(1/pi) int_0^T exp(-t^alpha) cos(z t) dt` with `nodes` points.
fn trapezoid_oracle(z: f64, alpha: f64, upper: f64, nodes: usize) -> f64 {
    let h = upper / (nodes - 1) as f64;
    let f = |t: f64| (-t.powf(alpha)).exp() * (z * t).cos();
    let interior: f64 = (1..nodes - 1).map(|i| f(i as f64 * h)).sum();
    h * (0.5 * (f(0.0) + f(upper)) + interior) / PI
}

#[test]
fn matches_trapezoid_oracle_at_alpha_1_5() {
    let cfg = EvalConfig::default();
    let p = sas(1.5, 1.0, 0.0);
    // exp(-12^1.5) is far below double precision
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let x = 0.5 * i as f64;
        let oracle = trapezoid_oracle(x, 1.5, 12.0, 1_000_000);
        let rel = (density(x, &p, &cfg).unwrap() - oracle).abs() / oracle;
        assert!(rel < 1e-5, "x = {x}: relative error {rel}");
        worst = worst.max(rel);
    }
    assert!(worst < 1e-5);
}

#[test]
fn closed_forms_to_1e_8() {
    let cfg = EvalConfig::default();
    for gamma in [0.5, 1.0, 3.0] {
        let cauchy = sas(1.0, gamma, 0.0);
        let gauss = sas(2.0, gamma, 0.0);
        for i in -500..=500 {
            let z = i as f64 * 0.1;
            let x = z * gamma;
            let c = 1.0 / (PI * gamma * (1.0 + z * z));
            let var = 2.0 * gamma * gamma;
            let g = (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            assert!((density(x, &cauchy, &cfg).unwrap() - c).abs() < 1e-8);
            assert!((density(x, &gauss, &cfg).unwrap() - g).abs() < 1e-8);
        }
    }
}

#[test]
fn quadrature_agrees_with_closed_forms() {
    // the generic path, exercised at the two closed-form exponents
    let cfg = EvalConfig::default();
    for i in 0..=60 {
        let z = i as f64 * 0.5;
        let c = 1.0 / (PI * (1.0 + z * z));
        let g = (-0.25 * z * z).exp() / (2.0 * PI.sqrt());
        assert!(
            (density_quadrature(z, &sas(1.0, 1.0, 0.0), &cfg).unwrap() - c).abs() < 1e-8,
            "z = {z}"
        );
        if g > 1e-8 {
            assert!(
                (density_quadrature(z, &sas(2.0, 1.0, 0.0), &cfg).unwrap() - g).abs() < 1e-8,
                "z = {z}"
            );
        }
    }
}

fn alpha_grid() -> Vec<f64> {
    (0..=10).map(|k| 1.0 + 0.1 * k as f64).collect()
}

#[test]
fn positive_on_log_grid() {
    let cfg = EvalConfig::default();
    let xs: Vec<f64> = (0..=40)
        .map(|k| 10f64.powf(-4.0 + 0.2 * k as f64))
        .collect();
    for alpha in alpha_grid() {
        if alpha > 1.95 {
            // the Gaussian closed form underflows long before 1e4; check its log instead
            continue;
        }
        let p = sas(alpha, 1.0, 0.0);
        for &x in &xs {
            for s in [x, -x] {
                let v = density(s, &p, &cfg).unwrap();
                assert!(v > 0.0, "alpha {alpha}, x {s}");
            }
        }
    }
    let g = sas(2.0, 1.0, 0.0);
    for &x in &xs {
        let lp = sasdp::stable::log_density(x, &g, &cfg).unwrap();
        assert!(lp.is_finite() && lp > f64::NEG_INFINITY);
    }
}

#[test]
fn peak_bound_holds_and_is_attained() {
    let cfg = EvalConfig::default();
    for alpha in alpha_grid() {
        for (gamma, mu) in [(1.0, 0.0), (2.5, -1.0), (0.3, 4.0)] {
            let p = sas(alpha, gamma, mu);
            let bound = density_peak_bound(&p);
            let at_mu = density(mu, &p, &cfg).unwrap();
            assert!(
                (at_mu - bound).abs() < cfg.abs_tol,
                "alpha {alpha}: {at_mu} vs {bound}"
            );
            for k in -40..=40 {
                let x = mu + gamma * 0.25 * k as f64;
                assert!(density(x, &p, &cfg).unwrap() <= bound + cfg.abs_tol);
            }
        }
    }
}

#[test]
fn normalizes_to_one() {
    let cfg = EvalConfig::default();
    for alpha in [1.1, 1.3, 1.5, 1.7, 1.9] {
        let p = sas(alpha, 1.0, 0.0);
        let r = 30.0;
        // Simpson's rule on [0, r]; the density is even
        let m = 6000;
        let h = r / m as f64;
        let mut s = density(0.0, &p, &cfg).unwrap() + density(r, &p, &cfg).unwrap();
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(i as f64 * h, &p, &cfg).unwrap();
        }
        let body = 2.0 * s * h / 3.0;
        let tails = 2.0 * survival(r, &p, &cfg).unwrap();
        let total = body + tails;
        assert!(
            (total - 1.0).abs() < 1e-4,
            "alpha {alpha}: total mass {total}"
        );
    }
}

#[test]
fn series_and_quadrature_agree_on_crossover_band() {
    let cfg = EvalConfig::default();
    for alpha in [1.1, 1.3, 1.5, 1.7, 1.9] {
        let p = sas(alpha, 1.0, 0.0);
        for k in 0..=30 {
            let z = cfg.tail_crossover * (1.0 + 3.0 * k as f64 / 30.0);
            let n = (1..=cfg.max_series_terms)
                .take_while(|&n| density_tail_series(z, &p, n).is_ok())
                .last()
                .expect("series admits at least one term");
            let series = density_tail_series(z, &p, n).unwrap();
            let quad = density_quadrature(z, &p, &cfg).unwrap();
            let allowed = series.error_bound + cfg.abs_tol.max(cfg.rel_tol * quad);
            assert!(
                (series.value - quad).abs() <= allowed,
                "alpha {alpha}, z {z}: series {} quad {quad} allowed {allowed}",
                series.value
            );
        }
    }
}

#[test]
fn continuous_in_alpha_near_two() {
    let cfg = EvalConfig::default();
    let at_two = density(0.0, &sas(2.0, 1.0, 0.0), &cfg).unwrap();
    let near = density(0.0, &sas(1.999, 1.0, 0.0), &cfg).unwrap();
    let nearer = density(0.0, &sas(1.9999, 1.0, 0.0), &cfg).unwrap();
    assert!((near - at_two).abs() < 1e-3);
    assert!((nearer - at_two).abs() < (near - at_two).abs());
    for x in [1.0, 5.0, 30.0] {
        assert!(density(x, &sas(1.999, 1.0, 0.0), &cfg).unwrap() > 0.0);
    }
}

#[test]
fn figure_peaks() {
    let cfg = EvalConfig::default();
    let values: Vec<f64> = [1.0, 1.5, 2.0]
        .iter()
        .map(|&a| density(0.0, &sas(a, 1.0, 0.0), &cfg).unwrap())
        .collect();
    let want = [
        1.0 / PI,
        statrs::function::gamma::gamma(2.0 / 3.0) / (1.5 * PI),
        0.5 / PI.sqrt(),
    ];
    for (v, w) in values.iter().zip(want) {
        assert!((v - w).abs() < 1e-6);
    }
    assert!(values[0] > values[1] && values[1] > values[2]);
}

#[test]
fn cdf_and_survival_are_complementary() {
    let cfg = EvalConfig::default();
    for alpha in [1.0, 1.2, 1.5, 1.8, 2.0] {
        let p = sas(alpha, 1.5, 0.5);
        let mut last = 0.0;
        for k in -20..=20 {
            let x = 0.5 + 1.7 * k as f64;
            let c = cdf(x, &p, &cfg).unwrap();
            assert!((c + survival(x, &p, &cfg).unwrap() - 1.0).abs() < 1e-12);
            assert!(c >= last);
            last = c;
        }
        assert!((cdf(0.5, &p, &cfg).unwrap() - 0.5).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_about_location(alpha in 1.0f64..=2.0, gamma in 0.1f64..10.0, mu in -5.0f64..5.0, d in 0.0f64..60.0) {
        let cfg = EvalConfig::default();
        let p = sas(alpha, gamma, mu);
        let up = density(mu + d, &p, &cfg).unwrap();
        let down = density(mu - d, &p, &cfg).unwrap();
        prop_assert!((up - down).abs() < cfg.abs_tol);
    }

    #[test]
    fn scale_law(alpha in 1.05f64..1.95, gamma in 0.1f64..20.0, z in -80.0f64..80.0) {
        let cfg = EvalConfig::default();
        let scaled = gamma * density(gamma * z, &sas(alpha, gamma, 0.0), &cfg).unwrap();
        let standard = density(z, &sas(alpha, 1.0, 0.0), &cfg).unwrap();
        prop_assert!((scaled - standard).abs() <= cfg.rel_tol * standard,
            "scaled {} standard {}", scaled, standard);
    }
}
