//! Additive noise mechanisms and their distortion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::sampling::{sample_gaussian, sample_laplace, sample_standard_sas, RandomStream};
use crate::stable::StableParams;

/// Noise family and its parameters.
///
/// Serialized as `{"kind": "sas", "alpha": .., "gamma": ..}`,
/// `{"kind": "laplace", "b": ..}` or `{"kind": "gaussian", "sigma": ..}`;
/// fields belonging to another kind are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub enum MechanismSpec {
    /// Centered symmetric alpha-stable noise.
    Sas(StableParams),
    Laplace {
        b: f64,
    },
    Gaussian {
        sigma: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpecRepr {
    Sas { alpha: f64, gamma: f64 },
    Laplace { b: f64 },
    Gaussian { sigma: f64 },
}

impl TryFrom<SpecRepr> for MechanismSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr {
            SpecRepr::Sas { alpha, gamma } => MechanismSpec::sas(alpha, gamma),
            SpecRepr::Laplace { b } => MechanismSpec::laplace(b),
            SpecRepr::Gaussian { sigma } => MechanismSpec::gaussian(sigma),
        }
    }
}

impl From<MechanismSpec> for SpecRepr {
    fn from(spec: MechanismSpec) -> Self {
        match spec {
            MechanismSpec::Sas(p) => SpecRepr::Sas {
                alpha: p.alpha(),
                gamma: p.gamma(),
            },
            MechanismSpec::Laplace { b } => SpecRepr::Laplace { b },
            MechanismSpec::Gaussian { sigma } => SpecRepr::Gaussian { sigma },
        }
    }
}

fn positive_scale(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl MechanismSpec {
    pub fn sas(alpha: f64, gamma: f64) -> Result<Self> {
        StableParams::new(alpha, gamma, 0.0).map(MechanismSpec::Sas)
    }

    pub fn laplace(b: f64) -> Result<Self> {
        positive_scale("b", b).map(|b| MechanismSpec::Laplace { b })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive_scale("sigma", sigma).map(|sigma| MechanismSpec::Gaussian { sigma })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MechanismSpec::Sas(_) => "sas",
            MechanismSpec::Laplace { .. } => "laplace",
            MechanismSpec::Gaussian { .. } => "gaussian",
        }
    }

    /// Stable parameters of the SaS kind.
    pub fn sas_params(&self) -> Option<&StableParams> {
        match self {
            MechanismSpec::Sas(p) => Some(p),
            _ => None,
        }
    }

    /// One noise draw.
    pub fn draw(&self, stream: &mut RandomStream) -> f64 {
        match self {
            MechanismSpec::Sas(p) => p.gamma() * sample_standard_sas(p.alpha(), stream),
            MechanismSpec::Laplace { b } => sample_laplace(*b, stream),
            MechanismSpec::Gaussian { sigma } => sample_gaussian(*sigma, stream),
        }
    }
}

/// A released (perturbed) query response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutput {
    pub values: Vec<f64>,
    /// The unperturbed response; only populated by [`apply_retaining_clean`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean_values: Option<Vec<f64>>,
    /// `(seed, substream)` of the stream the noise came from.
    pub seed_used: (u64, u64),
    pub spec_used: MechanismSpec,
}

/// `query_result + noise`, one i.i.d. draw per coordinate.
pub fn apply(
    query_result: &[f64],
    spec: &MechanismSpec,
    stream: &mut RandomStream,
) -> Result<MechanismOutput> {
    if query_result.is_empty() {
        return Err(Error::EmptyInput(
            "query result must have at least one coordinate",
        ));
    }
    if let Some(bad) = query_result.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "query result contains non-finite value {bad}"
        )));
    }
    let seed_used = (stream.seed(), stream.substream_id());
    let values = query_result.iter().map(|v| v + spec.draw(stream)).collect();
    Ok(MechanismOutput {
        values,
        clean_values: None,
        seed_used,
        spec_used: *spec,
    })
}

/// [`apply`], keeping a copy of the clean response for debugging and tests.
pub fn apply_retaining_clean(
    query_result: &[f64],
    spec: &MechanismSpec,
    stream: &mut RandomStream,
) -> Result<MechanismOutput> {
    let mut out = apply(query_result, spec, stream)?;
    out.clean_values = Some(query_result.to_vec());
    Ok(out)
}

/// Perturbs each record independently before any aggregation.
pub fn apply_local(
    record_values: &[f64],
    spec: &MechanismSpec,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if let Some(bad) = record_values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "record contains non-finite value {bad}"
        )));
    }
    Ok(record_values
        .iter()
        .map(|v| v + spec.draw(stream))
        .collect())
}

/// `E|noise|`: `(2 gamma / pi) Gamma(1 - 1/alpha)` for SaS, `b` for Laplace,
/// `sqrt(2/pi) sigma` for Gaussian.
pub fn mad_analytic(spec: &MechanismSpec) -> Result<f64> {
    match spec {
        MechanismSpec::Sas(p) => {
            if p.alpha() <= 1.0 {
                return Err(Error::UndefinedMoment { alpha: p.alpha() });
            }
            Ok(2.0 * p.gamma() / PI * gamma(1.0 - 1.0 / p.alpha()))
        }
        MechanismSpec::Laplace { b } => Ok(*b),
        MechanismSpec::Gaussian { sigma } => Ok((2.0 / PI).sqrt() * sigma),
    }
}

/// Monte Carlo estimate of `E|noise|`.
///
/// For SaS noise with `alpha < 2`, `|noise|` has infinite variance, so
/// `std_error` is only indicative; `median_of_means` is a robust companion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub median_of_means: f64,
    pub n: usize,
}

pub const MIN_MONTE_CARLO_DRAWS: usize = 1000;
const MEDIAN_OF_MEANS_BLOCKS: usize = 32;

pub fn mad_monte_carlo(
    spec: &MechanismSpec,
    n: usize,
    stream: &mut RandomStream,
) -> Result<MadEstimate> {
    if let MechanismSpec::Sas(p) = spec {
        if p.alpha() <= 1.0 {
            return Err(Error::UndefinedMoment { alpha: p.alpha() });
        }
    }
    if n < MIN_MONTE_CARLO_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_MONTE_CARLO_DRAWS} draws, got {n}"
        )));
    }
    let draws: Vec<f64> = (0..n).map(|_| spec.draw(stream).abs()).collect();
    let nf = n as f64;
    let mean = draws.iter().sum::<f64>() / nf;
    let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);

    let block = n / MEDIAN_OF_MEANS_BLOCKS;
    let mut block_means: Vec<f64> = draws
        .chunks_exact(block)
        .take(MEDIAN_OF_MEANS_BLOCKS)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect();
    block_means.sort_by(f64::total_cmp);
    let mid = block_means.len() / 2;
    let median_of_means = 0.5 * (block_means[mid - 1] + block_means[mid]);

    Ok(MadEstimate {
        estimate: mean,
        std_error: (var / nf).sqrt(),
        median_of_means,
        n,
    })
}

/// Law of `sum_i a_i Y_i` for i.i.d. `Y_i ~ params` with zero location:
/// `SaS(alpha, (sum |a_i|^alpha)^(1/alpha) gamma, 0)`.
pub fn aggregate_params(coefficients: &[f64], params: &StableParams) -> Result<StableParams> {
    if params.mu() != 0.0 {
        return Err(Error::NonZeroLocation(params.mu()));
    }
    if coefficients.is_empty() {
        return Err(Error::EmptyInput(
            "aggregation needs at least one coefficient",
        ));
    }
    if coefficients.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter(
            "coefficients must be finite".into(),
        ));
    }
    let alpha = params.alpha();
    let norm = coefficients
        .iter()
        .map(|a| a.abs().powf(alpha))
        .sum::<f64>();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("coefficients are all zero".into()));
    }
    StableParams::new(alpha, norm.powf(1.0 / alpha) * params.gamma(), 0.0)
}
