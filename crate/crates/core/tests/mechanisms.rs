use proptest::prelude::*;
use sasdp::mechanisms::{aggregate_params, apply, mad_analytic, mad_monte_carlo, MechanismSpec};
use sasdp::sampling::{sample, try_ks_statistic, RandomStream};
use sasdp::stable::{CdfTable, EvalConfig, StableParams};

#[test]
fn weighted_sums_follow_aggregate_law() {
    let weights = [0.5, 1.0, 2.0, 0.25];
    for alpha in [1.0, 1.5, 2.0] {
        let p = StableParams::new(alpha, 1.0, 0.0).unwrap();
        let agg = aggregate_params(&weights, &p).unwrap();
        let table = CdfTable::for_params(agg, EvalConfig::default()).unwrap();
        let mut s = RandomStream::new(31, 0);
        let sums: Vec<f64> = (0..10_000)
            .map(|_| weights.iter().map(|w| w * sample(&p, &mut s)).sum())
            .collect();
        let r = try_ks_statistic(&sums, |x| table.cdf(x)).unwrap();
        assert!(r.pass, "alpha {alpha}: D = {}", r.statistic);
    }
}

#[test]
fn mad_monte_carlo_within_one_percent() {
    // For alpha <= 1.5 the error of a 10^6-draw mean routinely exceeds 1%
    // (|Y| has infinite variance); those cases live in the acceptance suite.
    let cases = [
        MechanismSpec::sas(1.8, 1.0).unwrap(),
        MechanismSpec::laplace(1.0).unwrap(),
        MechanismSpec::gaussian(1.0).unwrap(),
    ];
    for (i, spec) in cases.iter().enumerate() {
        let exact = mad_analytic(spec).unwrap();
        let est = mad_monte_carlo(spec, 1_000_000, &mut RandomStream::new(35, i as u64)).unwrap();
        assert!(
            (est.estimate / exact - 1.0).abs() < 0.01,
            "{spec:?}: {} vs {exact}",
            est.estimate
        );
    }
}

#[test]
fn mad_endpoint_matches_gaussian_exactly() {
    for sigma in [0.5, 1.0, 2.0, 7.5] {
        let sas = MechanismSpec::sas(2.0, sigma / 2f64.sqrt()).unwrap();
        let gau = MechanismSpec::gaussian(sigma).unwrap();
        let (a, b) = (mad_analytic(&sas).unwrap(), mad_analytic(&gau).unwrap());
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * b, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifting_the_response_shifts_the_release(
        seed in any::<u64>(),
        c in -100.0f64..100.0,
        f in proptest::collection::vec(-1e3f64..1e3, 1..8),
        alpha in 1.0f64..=2.0,
    ) {
        let spec = MechanismSpec::sas(alpha, 1.0).unwrap();
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        let a = apply(&shifted, &spec, &mut RandomStream::new(seed, 0)).unwrap();
        let b = apply(&f, &spec, &mut RandomStream::new(seed, 0)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            let diff = x - y;
            prop_assert!((diff - c).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())));
        }
    }

    #[test]
    fn aggregate_scale_is_an_alpha_norm(
        alpha in 1.0f64..=2.0,
        gamma in 0.1f64..10.0,
        w in proptest::collection::vec(-5.0f64..5.0, 1..10),
    ) {
        prop_assume!(w.iter().any(|v| v.abs() > 1e-3));
        let p = StableParams::new(alpha, gamma, 0.0).unwrap();
        let agg = aggregate_params(&w, &p).unwrap();
        let norm = w.iter().map(|v| v.abs().powf(alpha)).sum::<f64>().powf(1.0 / alpha);
        prop_assert!((agg.gamma() - norm * gamma).abs() <= 1e-12 * norm * gamma);
        prop_assert_eq!(agg.alpha(), alpha);
        prop_assert_eq!(agg.mu(), 0.0);
    }
}
