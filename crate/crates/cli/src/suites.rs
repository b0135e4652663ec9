//! Statistical self-check suites behind `sasdp validate`.
//!
//! Check `i` of a suite draws from substream `substream + i` (or a block of
//! substreams starting there), so results depend only on the seed.

use rayon::prelude::*;
use serde::Serialize;

use sasdp::mechanisms::{aggregate_params, mad_analytic, mad_monte_carlo, MechanismSpec};
use sasdp::privacy::{estimate_epsilon, privacy_loss_scalar, Epsilon, SearchConfig};
use sasdp::sampling::{sample, sample_vector, try_ks_statistic, RandomStream};
use sasdp::stable::{CdfTable, EvalConfig, StableParams};
use sasdp::Result;

use crate::args::Suite;

pub const KS_SAMPLES: usize = 10_000;
pub const SAMPLER_SUBSTREAMS: u64 = 100;
pub const SAMPLER_REQUIRED: usize = 95;
pub const CLOSURE_SUBSTREAMS: u64 = 20;
pub const CLOSURE_REQUIRED: usize = 18;
pub const MAD_DRAWS: usize = 1_000_000;
pub const MAD_BAND: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub substream: u64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(
    suite: Suite,
    seed: u64,
    substream: u64,
    config: &EvalConfig,
) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Sampler => sampler_checks(seed, substream, config)?,
        Suite::Closure => closure_checks(seed, substream, config)?,
        Suite::Mad => mad_checks(seed, substream)?,
        Suite::Privacy => privacy_checks(config)?,
    };
    Ok(SuiteReport {
        suite,
        seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Substreams (out of `count`, starting at `first`) whose `KS_SAMPLES`
/// draws from `draw` pass KS against `law` at the 99% level.
fn ks_pass_count(
    law: StableParams,
    config: &EvalConfig,
    seed: u64,
    first: u64,
    count: u64,
    draw: impl Fn(&mut RandomStream) -> Vec<f64> + Sync,
) -> Result<usize> {
    let table = CdfTable::for_params(law, *config)?;
    let passes = (first..first + count)
        .into_par_iter()
        .map(|s| {
            let xs = draw(&mut RandomStream::new(seed, s));
            try_ks_statistic(&xs, |x| table.cdf(x)).map(|r| r.pass as usize)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(passes.iter().sum())
}

pub fn sampler_checks(seed: u64, substream: u64, config: &EvalConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, alpha) in [1.0, 1.25, 1.5, 1.75, 2.0].into_iter().enumerate() {
        let p = StableParams::new(alpha, 1.0, 0.0)?;
        let first = substream + i as u64 * SAMPLER_SUBSTREAMS;
        let passes = ks_pass_count(p, config, seed, first, SAMPLER_SUBSTREAMS, |s| {
            sample_vector(KS_SAMPLES, &p, s)
        })?;
        checks.push(Check {
            name: format!("ks alpha={alpha}"),
            pass: passes >= SAMPLER_REQUIRED,
            statistic: passes as f64,
            threshold: SAMPLER_REQUIRED as f64,
            substream: first,
            detail: format!("{passes}/{SAMPLER_SUBSTREAMS} substreams pass KS at 99%"),
        });
    }
    Ok(checks)
}

pub fn closure_checks(seed: u64, substream: u64, config: &EvalConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut first = substream;
    for alpha in [1.0, 1.5, 2.0] {
        for (a, b) in [(1.0, 1.0), (2.0, 1.0)] {
            let p = StableParams::new(alpha, 1.0, 0.0)?;
            let law = aggregate_params(&[a, b], &p)?;
            let passes = ks_pass_count(law, config, seed, first, CLOSURE_SUBSTREAMS, |s| {
                (0..KS_SAMPLES)
                    .map(|_| a * sample(&p, s) + b * sample(&p, s))
                    .collect()
            })?;
            checks.push(Check {
                name: format!("closure alpha={alpha} a={a} b={b}"),
                pass: passes >= CLOSURE_REQUIRED,
                statistic: passes as f64,
                threshold: CLOSURE_REQUIRED as f64,
                substream: first,
                detail: format!(
                    "{passes}/{CLOSURE_SUBSTREAMS} substreams pass KS against scale {}",
                    law.gamma()
                ),
            });
            first += CLOSURE_SUBSTREAMS;
        }
    }
    Ok(checks)
}

pub fn mad_checks(seed: u64, substream: u64) -> Result<Vec<Check>> {
    let cases = [
        ("sas alpha=1.2", MechanismSpec::sas(1.2, 1.0)?),
        ("sas alpha=1.5", MechanismSpec::sas(1.5, 1.0)?),
        ("sas alpha=1.8", MechanismSpec::sas(1.8, 1.0)?),
        ("laplace b=1", MechanismSpec::laplace(1.0)?),
        ("gaussian sigma=1", MechanismSpec::gaussian(1.0)?),
    ];
    let mut checks = cases
        .par_iter()
        .enumerate()
        .map(|(i, (name, spec))| {
            let s = substream + i as u64;
            let exact = mad_analytic(spec)?;
            let est = mad_monte_carlo(spec, MAD_DRAWS, &mut RandomStream::new(seed, s))?;
            let rel = (est.estimate - exact).abs() / exact;
            Ok(Check {
                name: format!("mad {name}"),
                pass: rel < MAD_BAND,
                statistic: rel,
                threshold: MAD_BAND,
                substream: s,
                detail: format!(
                    "estimate {} (median of means {}, std error {}) vs analytic {exact}",
                    est.estimate, est.median_of_means, est.std_error
                ),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sigma = 1.0;
    let sas = mad_analytic(&MechanismSpec::sas(2.0, sigma / 2f64.sqrt())?)?;
    let gau = mad_analytic(&MechanismSpec::gaussian(sigma)?)?;
    let gap = (sas - gau).abs();
    checks.push(Check {
        name: "mad endpoint alpha=2 vs gaussian".into(),
        pass: gap <= 4.0 * f64::EPSILON * gau,
        statistic: gap,
        threshold: 4.0 * f64::EPSILON * gau,
        substream,
        detail: format!("sas {sas} gaussian {gau}"),
    });
    Ok(checks)
}

pub fn privacy_checks(config: &EvalConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for alpha in [1.0, 1.25, 1.5, 1.75] {
        let search = SearchConfig::for_problem(1.0, 1.0);
        let report = estimate_epsilon(alpha, 1.0, 1.0, &search, config)?;
        let p = StableParams::new(alpha, 1.0, 0.0)?;
        let loss = |x: f64| privacy_loss_scalar(x, &p, 0.0, 1.0, config).map(f64::abs);
        let (near, far) = (loss(1e3)?.max(loss(-1e3)?), loss(1e4)?.max(loss(-1e4)?));
        let (pass, statistic, detail) = match report.epsilon {
            Epsilon::Finite(eps) => {
                let mut over = 0.0f64;
                for i in 0..=4000 {
                    let x = -1e4 + 5.0 * i as f64;
                    over = over.max(loss(x)? - eps);
                }
                let ok = near < 0.05 && far < 0.05 && far < near && over <= search.refine_tol;
                (
                    ok,
                    eps,
                    format!("|loss| at 1e3 {near}, at 1e4 {far}, curve excess {over}"),
                )
            }
            Epsilon::Unbounded => (false, f64::INFINITY, "reported unbounded".into()),
        };
        checks.push(Check {
            name: format!("bounded loss alpha={alpha}"),
            pass,
            statistic,
            threshold: 0.05,
            substream: 0,
            detail,
        });
    }

    let cauchy = estimate_epsilon(1.0, 1.0, 1.0, &SearchConfig::for_problem(1.0, 1.0), config)?;
    let pin = 2.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let e = cauchy.epsilon.value().unwrap_or(f64::INFINITY);
    checks.push(Check {
        name: "cauchy budget".into(),
        pass: (e - pin).abs() < 1e-4,
        statistic: e,
        threshold: 1e-4,
        substream: 0,
        detail: format!("expected {pin}"),
    });

    let gauss = estimate_epsilon(2.0, 1.0, 1.0, &SearchConfig::for_problem(1.0, 1.0), config)?;
    let p = StableParams::new(2.0, 1.0, 0.0)?;
    let l: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&x| privacy_loss_scalar(x, &p, 0.0, 1.0, config))
        .collect::<Result<_>>()?;
    let worst = l
        .windows(2)
        .map(|w| ((w[1] / w[0]) / 10.0 - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "gaussian unbounded".into(),
        pass: gauss.epsilon == Epsilon::Unbounded && worst < 0.05,
        statistic: worst,
        threshold: 0.05,
        substream: 0,
        detail: format!("losses at 10, 100, 1000: {l:?}"),
    });
    Ok(checks)
}
