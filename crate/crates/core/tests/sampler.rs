use proptest::prelude::*;
use rayon::prelude::*;
use sasdp::mechanisms::aggregate_params;
use sasdp::sampling::{ks_statistic, sample, sample_vector, try_ks_statistic, RandomStream};
use sasdp::stable::{CdfTable, EvalConfig, StableParams};

const N: usize = 10_000;

fn sas(alpha: f64, gamma: f64) -> StableParams {
    StableParams::new(alpha, gamma, 0.0).unwrap()
}

fn ks_passes(alpha: f64, gamma: f64, seed: u64, substreams: u64) -> usize {
    let p = sas(alpha, gamma);
    let table = CdfTable::for_params(p, EvalConfig::default()).unwrap();
    (0..substreams)
        .into_par_iter()
        .map(|s| {
            let xs = sample_vector(N, &p, &mut RandomStream::new(seed, s));
            try_ks_statistic(&xs, |x| table.cdf(x)).unwrap().pass as usize
        })
        .sum()
}

#[test]
fn ks_against_cdf_for_95_of_100_substreams() {
    for alpha in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let passes = ks_passes(alpha, 1.0, 20_240_601, 100);
        assert!(
            passes >= 95,
            "alpha {alpha}: {passes}/100 substreams passed"
        );
    }
}

#[test]
fn ks_with_non_unit_scale_and_location() {
    let p = StableParams::new(1.5, 3.0, -2.0).unwrap();
    let table = CdfTable::for_params(p, EvalConfig::default()).unwrap();
    let xs = sample_vector(N, &p, &mut RandomStream::new(77, 0));
    assert!(try_ks_statistic(&xs, |x| table.cdf(x)).unwrap().pass);
}

#[test]
fn ks_detects_wrong_exponent() {
    let table = CdfTable::for_params(sas(1.5, 1.0), EvalConfig::default()).unwrap();
    let xs = sample_vector(N, &sas(1.0, 1.0), &mut RandomStream::new(3, 0));
    assert!(!try_ks_statistic(&xs, |x| table.cdf(x)).unwrap().pass);
}

#[test]
fn strictly_stable_sums() {
    for alpha in [1.0, 1.5, 2.0] {
        for (a, b) in [(1.0, 1.0), (2.0, 1.0)] {
            let p = sas(alpha, 1.0);
            let agg = aggregate_params(&[a, b], &p).unwrap();
            let table = CdfTable::for_params(agg, EvalConfig::default()).unwrap();
            let mut s = RandomStream::new(4242, 0);
            let xs: Vec<f64> = (0..N)
                .map(|_| a * sample(&p, &mut s) + b * sample(&p, &mut s))
                .collect();
            let r = try_ks_statistic(&xs, |x| table.cdf(x)).unwrap();
            assert!(
                r.pass,
                "alpha {alpha}, (a, b) = ({a}, {b}): D = {}",
                r.statistic
            );
        }
    }
}

#[test]
fn substreams_are_uncorrelated() {
    let mut x = RandomStream::new(1, 0);
    let mut y = RandomStream::new(1, 1);
    let n = 100_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (x.open01() - 0.5, y.open01() - 0.5))
        .collect();
    let cov = pairs.iter().map(|(u, v)| u * v).sum::<f64>() / n as f64;
    // var of a centered uniform is 1/12; 5 standard errors of the sample correlation
    let corr = cov * 12.0;
    assert!(corr.abs() < 5.0 / (n as f64).sqrt(), "correlation {corr}");
}

#[test]
fn uniforms_pass_ks() {
    let mut s = RandomStream::new(99, 3);
    let us: Vec<f64> = (0..N).map(|_| s.open01()).collect();
    assert!(ks_statistic(&us, |u| u.clamp(0.0, 1.0)).unwrap().pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_bits(seed in any::<u64>(), sub in any::<u64>(), alpha in 1.0f64..=2.0) {
        let p = sas(alpha, 1.0);
        let a = sample_vector(64, &p, &mut RandomStream::new(seed, sub));
        let b = sample_vector(64, &p, &mut RandomStream::new(seed, sub));
        let bits_a: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn samples_are_finite(seed in any::<u64>(), alpha in 1.0f64..=2.0) {
        let p = sas(alpha, 1.0);
        let xs = sample_vector(256, &p, &mut RandomStream::new(seed, 0));
        prop_assert!(xs.iter().all(|x| x.is_finite()));
    }
}
