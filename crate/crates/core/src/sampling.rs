//! Seeded variate generation and Kolmogorov-Smirnov checks.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stable::StableParams;

/// Below this distance from 1 the Cauchy branch of the CMS transform is used.
const CAUCHY_BRANCH_WIDTH: f64 = 1e-9;

/// A reproducible stream of random bits.
///
/// Backed by the ChaCha20 block function, which is counter based: the seed
/// selects the key and `substream_id` selects an independent nonce, so
/// distinct substreams never overlap and need no coordination.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    substream_id: u64,
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64, substream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(substream_id);
        Self {
            seed,
            substream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// One draw from `SaS(alpha, 1, 0)` by the Chambers-Mallows-Stuck transform.
///
/// Always consumes one uniform and one exponential variate.
pub fn sample_standard_sas(alpha: f64, stream: &mut RandomStream) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 2.0);
    let u = PI * (stream.open01() - 0.5);
    let w = -stream.open01().ln();
    if (alpha - 1.0).abs() < CAUCHY_BRANCH_WIDTH {
        return u.tan();
    }
    let a = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let b = ((u - alpha * u).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// `gamma * Y + mu` with `Y` standardized.
pub fn sample(params: &StableParams, stream: &mut RandomStream) -> f64 {
    params.gamma() * sample_standard_sas(params.alpha(), stream) + params.mu()
}

/// `m` i.i.d. draws, identical to `m` successive calls of [`sample`].
pub fn sample_vector(m: usize, params: &StableParams, stream: &mut RandomStream) -> Vec<f64> {
    (0..m).map(|_| sample(params, stream)).collect()
}

/// Laplace(0, b) by inversion.
pub fn sample_laplace(b: f64, stream: &mut RandomStream) -> f64 {
    let v = stream.open01() - 0.5;
    -b * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

pub fn sample_gaussian(sigma: f64, stream: &mut RandomStream) -> f64 {
    sigma * stream.standard_normal()
}

/// One-sample Kolmogorov-Smirnov result at the 99% level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub critical_value_99: f64,
    pub pass: bool,
}

/// 99% critical value of the KS statistic.
///
/// `1.63 / sqrt(n)` for `n >= 35`; below that the Stephens small-sample
/// correction `1.63 / (sqrt(n) + 0.12 + 0.11 / sqrt(n))`.
pub fn ks_critical_value_99(n: usize) -> f64 {
    let root = (n as f64).sqrt();
    if n >= 35 {
        1.63 / root
    } else {
        1.63 / (root + 0.12 + 0.11 / root)
    }
}

pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsReport> {
    try_ks_statistic(samples, |x| Ok(cdf(x)))
}

/// [`ks_statistic`] for a fallible CDF, such as one backed by quadrature.
pub fn try_ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<KsReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("ks_statistic needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut statistic = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        let upper = (i + 1) as f64 / nf - f;
        let lower = f - i as f64 / nf;
        statistic = statistic.max(upper.abs()).max(lower.abs());
    }
    let critical_value_99 = ks_critical_value_99(n);
    Ok(KsReport {
        statistic,
        n,
        critical_value_99,
        pass: statistic < critical_value_99,
    })
}
