use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use serde::de::DeserializeOwned;
use serde::Serialize;

use sasdp::mechanisms::{apply, apply_retaining_clean, mad_analytic, MechanismSpec};
use sasdp::privacy::{
    calibrate_gamma, epsilon_for_error_rates, estimate_epsilon, Epsilon, SearchConfig,
};
use sasdp::queries::{evaluate, BoundedQuery, Dataset};
use sasdp::sampling::RandomStream;
use sasdp::stable::{density, EvalConfig, StableParams};

use crate::args::{
    CalibrateArgs, Command, DensityArgs, EpsilonArgs, GlobalOpts, PrivatizeArgs, ValidateArgs,
};
use crate::error::{CliError, CliResult};
use crate::json::{fmt_g17, to_json_bytes};
use crate::manifest::{sha256_hex, Artifact, RunManifest};
use crate::suites::{run_suite, SuiteReport};

/// Files produced by a command and whether its checks passed.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub inputs: BTreeMap<String, String>,
    pub success: bool,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            inputs: BTreeMap::new(),
            success: true,
        }
    }
}

pub fn eval_config(global: &GlobalOpts) -> CliResult<EvalConfig> {
    let config = EvalConfig {
        abs_tol: global.tol_abs,
        rel_tol: global.tol_rel,
        ..EvalConfig::default()
    };
    config.validate()?;
    Ok(config)
}

pub fn execute(global: &GlobalOpts, command: &Command) -> CliResult<Outcome> {
    let config = eval_config(global)?;
    match command {
        Command::Density(a) => density_table(a, &config),
        Command::Privatize(a) => privatize(a, global, command),
        Command::Epsilon(a) => epsilon_report(a, &config),
        Command::Calibrate(a) => calibrate(a),
        Command::Validate(a) => validate(a, global, &config),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

fn json(value: &impl Serialize) -> CliResult<Vec<u8>> {
    to_json_bytes(value).map_err(|e| CliError::Failure(format!("cannot encode JSON: {e}")))
}

fn density_table(a: &DensityArgs, config: &EvalConfig) -> CliResult<Outcome> {
    if !a.x_min.is_finite() || !a.x_max.is_finite() || a.x_min >= a.x_max {
        return Err(CliError::Usage(format!(
            "need finite x-min < x-max, got [{}, {}]",
            a.x_min, a.x_max
        )));
    }
    if a.steps < 2 {
        return Err(CliError::Usage(format!(
            "steps must be at least 2, got {}",
            a.steps
        )));
    }
    let params = StableParams::new(a.alpha, a.gamma, a.mu)?;
    let h = (a.x_max - a.x_min) / (a.steps - 1) as f64;
    let mut csv = String::from("x,pdf\n");
    for i in 0..a.steps {
        let x = if i + 1 == a.steps {
            a.x_max
        } else {
            a.x_min + i as f64 * h
        };
        let pdf = density(x, &params, config)?;
        writeln!(csv, "{},{}", fmt_g17(x), fmt_g17(pdf)).expect("writing to a String");
    }
    Ok(Outcome::ok(vec![Artifact::primary(csv.into_bytes())]))
}

/// Parses a JSON argument given inline (starting with `{`) or as a file path.
/// Returns the digest of the file when one was read.
fn json_arg<T: DeserializeOwned>(what: &str, arg: &str) -> CliResult<(T, Option<String>)> {
    let (text, digest) = if arg.trim_start().starts_with('{') {
        (arg.as_bytes().to_vec(), None)
    } else {
        let bytes = fs::read(arg)
            .map_err(|e| CliError::Usage(format!("cannot read {what} file {arg}: {e}")))?;
        let digest = sha256_hex(&bytes);
        (bytes, Some(digest))
    };
    let value = serde_json::from_slice(&text)
        .map_err(|e| CliError::Usage(format!("invalid {what}: {e}")))?;
    Ok((value, digest))
}

#[derive(Serialize)]
struct PrivatizeReport<'a> {
    query_values_released: &'a [f64],
    lower_bounds: &'a [f64],
    upper_bounds: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    clean_values: Option<&'a [f64]>,
    query: &'a BoundedQuery,
    mechanism: &'a MechanismSpec,
    seed: u64,
    substream: u64,
    manifest: &'a RunManifest,
}

fn privatize(a: &PrivatizeArgs, global: &GlobalOpts, command: &Command) -> CliResult<Outcome> {
    let mut inputs = BTreeMap::new();
    let (query, digest) = json_arg::<BoundedQuery>("query", &a.query)?;
    if let Some(d) = digest {
        inputs.insert("query".to_string(), d);
    }
    let (mechanism, digest) = json_arg::<MechanismSpec>("mechanism", &a.mechanism)?;
    if let Some(d) = digest {
        inputs.insert("mechanism".to_string(), d);
    }
    let query = match (query, a.n_max) {
        (BoundedQuery::Count { .. }, Some(n_max)) => BoundedQuery::Count { n_max },
        (q, _) => q,
    };
    query.validate()?;

    let data = fs::read(&a.data)
        .map_err(|e| CliError::Usage(format!("cannot read data file {}: {e}", a.data.display())))?;
    inputs.insert("data".to_string(), sha256_hex(&data));
    let fields: Vec<&str> = query.field().into_iter().collect();
    let dataset = Dataset::read_csv(&data[..], Some(&fields))?;
    let result = evaluate(&dataset, &query)?;

    let mut stream = RandomStream::new(global.seed, global.substream);
    let released = if a.debug_retain_clean {
        apply_retaining_clean(&result.values, &mechanism, &mut stream)?
    } else {
        apply(&result.values, &mechanism, &mut stream)?
    };

    let mut manifest = RunManifest::new(global, command);
    manifest.inputs = inputs.clone();
    let report = PrivatizeReport {
        query_values_released: &released.values,
        lower_bounds: &result.lower_bounds,
        upper_bounds: &result.upper_bounds,
        clean_values: released.clean_values.as_deref(),
        query: &query,
        mechanism: &mechanism,
        seed: global.seed,
        substream: global.substream,
        manifest: &manifest,
    };
    Ok(Outcome {
        artifacts: vec![Artifact::primary(json(&report)?)],
        inputs,
        success: true,
    })
}

#[derive(Serialize)]
struct EpsilonReport {
    alpha: f64,
    gamma: f64,
    sensitivity: f64,
    epsilon: Epsilon,
    argmax_x: Option<f64>,
    search_radius_used: f64,
    search: SearchConfig,
}

fn epsilon_report(a: &EpsilonArgs, config: &EvalConfig) -> CliResult<Outcome> {
    StableParams::new(a.alpha, a.gamma, 0.0)?;
    let search = SearchConfig::for_problem(a.gamma, a.sensitivity);
    let report = estimate_epsilon(a.alpha, a.gamma, a.sensitivity, &search, config)?;
    let summary = EpsilonReport {
        alpha: a.alpha,
        gamma: a.gamma,
        sensitivity: a.sensitivity,
        epsilon: report.epsilon,
        argmax_x: report.argmax_x,
        search_radius_used: report.search_radius_used,
        search,
    };
    let mut curve = String::from("x,loss\n");
    for (x, l) in &report.loss_curve {
        writeln!(curve, "{},{}", fmt_g17(*x), fmt_g17(*l)).expect("writing to a String");
    }
    Ok(Outcome::ok(vec![
        Artifact::primary(json(&summary)?),
        Artifact {
            role: "loss_curve",
            suffix: Some("loss.csv"),
            bytes: curve.into_bytes(),
        },
    ]))
}

#[derive(Serialize)]
struct CalibrationReport {
    alpha: f64,
    sensitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_bound: Option<f64>,
    epsilon_used: f64,
    gamma: f64,
    /// `None` where the mean absolute deviation is undefined (alpha = 1).
    mad_analytic: Option<f64>,
}

fn calibrate(a: &CalibrateArgs) -> CliResult<Outcome> {
    let epsilon = match (a.epsilon, a.p_bound, a.q_bound) {
        (Some(e), None, None) => e,
        (None, Some(p), Some(q)) => epsilon_for_error_rates(p, q)?,
        _ => {
            return Err(CliError::Usage(
                "give either --epsilon or both --p-bound and --q-bound".into(),
            ))
        }
    };
    let gamma = calibrate_gamma(a.alpha, a.sensitivity, epsilon, a.tol)?;
    let mad = mad_analytic(&MechanismSpec::sas(a.alpha, gamma)?).ok();
    let report = CalibrationReport {
        alpha: a.alpha,
        sensitivity: a.sensitivity,
        p_bound: a.p_bound,
        q_bound: a.q_bound,
        epsilon_used: epsilon,
        gamma,
        mad_analytic: mad,
    };
    Ok(Outcome::ok(vec![Artifact::primary(json(&report)?)]))
}

fn validate(a: &ValidateArgs, global: &GlobalOpts, config: &EvalConfig) -> CliResult<Outcome> {
    let report: SuiteReport = run_suite(a.suite, global.seed, global.substream, config)?;
    let success = report.pass;
    Ok(Outcome {
        artifacts: vec![Artifact::primary(json(&report)?)],
        inputs: BTreeMap::new(),
        success,
    })
}

/// Rejects a replay whose input files no longer match the manifest.
pub fn check_inputs(
    recorded: &BTreeMap<String, String>,
    found: &BTreeMap<String, String>,
) -> CliResult<()> {
    for (role, digest) in recorded {
        match found.get(role) {
            Some(d) if d == digest => {}
            Some(d) => {
                return Err(CliError::Failure(format!(
                    "input {role} changed since the recorded run: sha256 {d}, manifest has {digest}"
                )))
            }
            None => {
                return Err(CliError::Failure(format!(
                    "input {role} recorded in the manifest was not read"
                )))
            }
        }
    }
    Ok(())
}
