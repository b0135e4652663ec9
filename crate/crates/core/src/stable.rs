//! Symmetric alpha-stable densities.
//!
//! The density of `SaS(alpha, gamma, mu)` has closed forms only for the
//! Cauchy (`alpha = 1`) and Gaussian (`alpha = 2`) members. Everything else
//! is evaluated from one of two representations of the standardized law:
//!
//! ```text
//! p(z)  = (1/pi) * int_0^inf exp(-t^alpha) cos(z t) dt           (cosine form)
//! p(z) ~ (1/pi) * sum_k (-1)^(k+1) Gamma(alpha k + 1) / k!
//!                 * sin(k alpha pi / 2) * z^(-alpha k - 1)        (|z| -> inf)
//! ```
//!
//! and rescaled with `p(x; alpha, gamma, mu) = p((x - mu) / gamma) / gamma`.
//! The cosine form is integrated up to a point where the stretched
//! exponential has dropped below a configured tail mass, on panels narrow
//! enough to resolve each oscillation. Past a crossover in `|z|` the
//! asymptotic series, truncated at its smallest term, takes over.

use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{composite_from_origin, PanelSum};

/// Parameters `(alpha, gamma, mu)` of a symmetric alpha-stable law.
///
/// Skewness is fixed at zero and not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct StableParams {
    alpha: f64,
    gamma: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    gamma: f64,
    #[serde(default)]
    mu: f64,
}

impl TryFrom<RawParams> for StableParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        StableParams::new(raw.alpha, raw.gamma, raw.mu)
    }
}

impl StableParams {
    pub fn new(alpha: f64, gamma: f64, mu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite, got {mu}"
            )));
        }
        Ok(Self { alpha, gamma, mu })
    }

    /// The standardized law `(alpha, 1, 0)`.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Same shape and scale, centered at `mu`.
    pub fn with_location(&self, mu: f64) -> Result<Self> {
        Self::new(self.alpha, self.gamma, mu)
    }

    /// `(x - mu) / gamma`.
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.gamma
    }

    fn is_cauchy(&self) -> bool {
        self.alpha == 1.0
    }

    fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }
}

/// Tolerances and thresholds for every numerical routine in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Target absolute error of a density value.
    pub abs_tol: f64,
    /// Target relative error of a density value.
    pub rel_tol: f64,
    /// Standardized distance `|x - mu| / gamma` above which the tail series is tried.
    pub tail_crossover: f64,
    pub max_series_terms: usize,
    /// Tail mass `exp(-(gamma T)^alpha)` at which the frequency integral is cut.
    pub quadrature_truncation_tol: f64,
    /// Target absolute error of a CDF value.
    pub cdf_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            tail_crossover: 25.0,
            max_series_terms: 64,
            quadrature_truncation_tol: 1e-14,
            cdf_tol: 1e-10,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("quadrature_truncation_tol", self.quadrature_truncation_tol),
            ("cdf_tol", self.cdf_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.tail_crossover.is_nan() || self.tail_crossover <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "tail_crossover must exceed 1, got {}",
                self.tail_crossover
            )));
        }
        if self.max_series_terms == 0 {
            return Err(Error::InvalidParameter(
                "max_series_terms must be at least 1".into(),
            ));
        }
        if self.quadrature_truncation_tol >= 1.0 {
            return Err(Error::InvalidParameter(
                "quadrature_truncation_tol must be below 1".into(),
            ));
        }
        Ok(())
    }
}

/// `exp(i t mu - |gamma t|^alpha)`.
pub fn characteristic_function(t: f64, params: &StableParams) -> Complex64 {
    let modulus = (-(params.gamma * t).abs().powf(params.alpha)).exp();
    Complex64::from_polar(modulus, t * params.mu)
}

/// Density of `params` at `x`.
///
/// Closed forms at `alpha = 1` and `alpha = 2`; otherwise the tail series
/// when it meets both tolerances, else quadrature of the cosine form.
pub fn density(x: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    let z = params.standardize(x).abs();
    if params.is_cauchy() {
        return Ok(FRAC_1_PI / (params.gamma * (1.0 + z * z)));
    }
    if params.is_gaussian() {
        return Ok((-0.25 * z * z).exp() / (2.0 * PI.sqrt() * params.gamma));
    }
    if z >= config.tail_crossover {
        if let Some(n) = optimal_series_terms(z, params.alpha, config.max_series_terms) {
            let series = standard_tail_series(z, params.alpha, n);
            if series.value > 0.0
                && series.error_bound <= config.abs_tol * params.gamma
                && series.error_bound <= config.rel_tol * series.value
            {
                return Ok(series.value / params.gamma);
            }
        }
    }
    density_quadrature(x, params, config)
}

/// Numerical value of `(1/(pi gamma)) int_0^T exp(-t^alpha) cos(z t) dt`.
///
/// `T` is where the integrand envelope drops below
/// `config.quadrature_truncation_tol`; panels are at most `T/64` wide and at
/// most a quarter of a half-period of `cos(z t)`.
pub fn density_quadrature(x: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    let z = params.standardize(x).abs();
    let scale = PI * params.gamma;
    let (value, _) = stretched_oscillatory_integral(
        |t| (z * t).cos(),
        z,
        params.alpha,
        config.quadrature_truncation_tol,
        1.0,
        |v, err| err / scale <= config.abs_tol.max(config.rel_tol * v.abs() / scale),
    )?;
    let value = value / scale;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonConvergence(format!(
            "density at z = {z} resolved to non-positive value {value}"
        )))
    }
}

/// Partial sum of the asymptotic tail series and the size of its first omitted term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSeries {
    pub value: f64,
    pub error_bound: f64,
    pub n_terms: usize,
}

/// First `n_terms` terms of the tail series at `x`, rescaled by `gamma`.
///
/// Fails with [`Error::SeriesDivergent`] when the term magnitudes are not
/// strictly decreasing through term `n_terms + 1`, i.e. when `x` is too close
/// to `mu` for that many terms.
pub fn density_tail_series(x: f64, params: &StableParams, n_terms: usize) -> Result<TailSeries> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be at least 1".into()));
    }
    let z = params.standardize(x).abs();
    if z == 0.0 {
        return Err(Error::InvalidParameter(
            "tail series is undefined at x = mu".into(),
        ));
    }
    let ln_z = z.ln();
    let mut prev = density_term_ln_magnitude(params.alpha, 1, ln_z);
    for k in 2..=n_terms + 1 {
        let next = density_term_ln_magnitude(params.alpha, k, ln_z);
        if next >= prev {
            return Err(Error::SeriesDivergent { z, n_terms });
        }
        prev = next;
    }
    let s = standard_tail_series(z, params.alpha, n_terms);
    Ok(TailSeries {
        value: s.value / params.gamma,
        error_bound: s.error_bound / params.gamma,
        n_terms,
    })
}

/// `Gamma(1/alpha) / (alpha gamma pi)`, the density value at `mu` and its global maximum.
pub fn density_peak_bound(params: &StableParams) -> f64 {
    gamma(1.0 / params.alpha) / (params.alpha * params.gamma * PI)
}

/// Natural log of the density; closed forms are evaluated in log space.
pub fn log_density(x: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    let z = params.standardize(x).abs();
    if params.is_cauchy() {
        return Ok(-(PI * params.gamma).ln() - (z * z).ln_1p());
    }
    if params.is_gaussian() {
        return Ok(-0.25 * z * z - (2.0 * PI.sqrt() * params.gamma).ln());
    }
    density(x, params, config).map(f64::ln)
}

/// Distribution function `P(X <= x)`.
pub fn cdf(x: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    let z = params.standardize(x);
    let tail = standard_survival(z.abs(), params, config)?;
    Ok(if z >= 0.0 { 1.0 - tail } else { tail })
}

/// `P(X > x)`, accurate in the upper tail where `1 - cdf` would cancel.
pub fn survival(x: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    let z = params.standardize(x);
    let tail = standard_survival(z.abs(), params, config)?;
    Ok(if z >= 0.0 { tail } else { 1.0 - tail })
}

/// `P(Z > a)` for the standardized law, `a >= 0`.
fn standard_survival(a: f64, params: &StableParams, config: &EvalConfig) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.5);
    }
    if params.is_cauchy() {
        return Ok(FRAC_1_PI * (1.0 / a).atan());
    }
    if params.is_gaussian() {
        return Ok(0.5 * erfc(0.5 * a));
    }
    if a.is_infinite() {
        return Ok(0.0);
    }
    if a >= config.tail_crossover {
        if let Some(n) = optimal_survival_terms(a, params.alpha, config.max_series_terms) {
            let s = standard_survival_series(a, params.alpha, n);
            if s.error_bound <= config.cdf_tol && s.value > 0.0 {
                return Ok(s.value);
            }
        }
    }
    // P(Z > a) = 1/2 - (1/pi) int_0^inf exp(-t^alpha) sin(a t) / t dt
    let (body, _) = stretched_oscillatory_integral(
        |t| if t == 0.0 { a } else { (a * t).sin() / t },
        a,
        params.alpha,
        config.quadrature_truncation_tol,
        1.0 / a.max(1.0),
        |_, err| err * FRAC_1_PI <= config.cdf_tol,
    )?;
    Ok((0.5 - body * FRAC_1_PI).clamp(0.0, 0.5))
}

const MAX_PANELS: usize = 1 << 22;
const REFINEMENTS: u32 = 4;

/// `int_0^T exp(-t^alpha) kernel(t) dt` with panel halving until `accept`.
///
/// `kernel_tail` bounds `|kernel(t)|` for `t >= T`; it scales the
/// truncation error added to the panel error estimate.
fn stretched_oscillatory_integral(
    kernel: impl Fn(f64) -> f64,
    frequency: f64,
    alpha: f64,
    truncation_tol: f64,
    kernel_tail: f64,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<(f64, f64)> {
    let upper = (-truncation_tol.ln()).powf(1.0 / alpha);
    // int_T^inf exp(-t^alpha) dt <= exp(-T^alpha) T^(1 - alpha) / alpha, asymptotically
    let truncation = truncation_tol * upper.powf(1.0 - alpha) / alpha * kernel_tail;
    let mut width = upper / 64.0;
    if frequency > 0.0 {
        width = width.min(PI / (4.0 * frequency));
    }
    let base_panels = (upper / width).ceil().max(1.0) as usize;
    let integrand = |t: f64| (-t.powf(alpha)).exp() * kernel(t);
    let mut last = PanelSum::default();
    for refine in 0..REFINEMENTS {
        let panels = base_panels << refine;
        if panels > MAX_PANELS {
            break;
        }
        last = composite_from_origin(&integrand, upper, panels);
        let error = last.error + truncation;
        if accept(last.value, error) {
            return Ok((last.value, error));
        }
    }
    Err(Error::NonConvergence(format!(
        "oscillatory integral at frequency {frequency}, alpha {alpha}: error estimate {} after refinement",
        last.error + truncation
    )))
}

/// `ln(Gamma(alpha k + 1) / k! * z^(-alpha k - 1))`.
fn density_term_ln_magnitude(alpha: f64, k: usize, ln_z: f64) -> f64 {
    let kf = k as f64;
    ln_gamma(alpha * kf + 1.0) - ln_gamma(kf + 1.0) - (alpha * kf + 1.0) * ln_z
}

/// `ln(Gamma(alpha k) / k! * z^(-alpha k))`, the survival-series analogue.
fn survival_term_ln_magnitude(alpha: f64, k: usize, ln_z: f64) -> f64 {
    let kf = k as f64;
    ln_gamma(alpha * kf) - ln_gamma(kf + 1.0) - alpha * kf * ln_z
}

/// `(-1)^(k+1) sin(k alpha pi / 2)` with the angle reduced mod `2 pi` first.
fn term_sign_factor(alpha: f64, k: usize) -> f64 {
    let turns = (k as f64 * alpha * 0.5) % 2.0;
    let s = (turns * PI).sin();
    if k % 2 == 1 {
        s
    } else {
        -s
    }
}

/// Largest `n <= max_terms` whose magnitudes decrease through term `n + 1`.
fn largest_decreasing_order(ln_mag: impl Fn(usize) -> f64, max_terms: usize) -> Option<usize> {
    let mut prev = ln_mag(1);
    let mut n = 0;
    for k in 2..=max_terms + 1 {
        let next = ln_mag(k);
        if next >= prev {
            break;
        }
        n = k - 1;
        prev = next;
    }
    (n >= 1).then_some(n)
}

fn optimal_series_terms(z: f64, alpha: f64, max_terms: usize) -> Option<usize> {
    let ln_z = z.ln();
    largest_decreasing_order(|k| density_term_ln_magnitude(alpha, k, ln_z), max_terms)
}

fn optimal_survival_terms(z: f64, alpha: f64, max_terms: usize) -> Option<usize> {
    let ln_z = z.ln();
    largest_decreasing_order(|k| survival_term_ln_magnitude(alpha, k, ln_z), max_terms)
}

fn standard_tail_series(z: f64, alpha: f64, n: usize) -> TailSeries {
    let ln_z = z.ln();
    let value = (1..=n)
        .map(|k| term_sign_factor(alpha, k) * density_term_ln_magnitude(alpha, k, ln_z).exp())
        .sum::<f64>()
        * FRAC_1_PI;
    let error_bound = density_term_ln_magnitude(alpha, n + 1, ln_z).exp() * FRAC_1_PI;
    TailSeries {
        value,
        error_bound,
        n_terms: n,
    }
}

/// Term-by-term integral of the density series from `z` to infinity.
fn standard_survival_series(z: f64, alpha: f64, n: usize) -> TailSeries {
    let ln_z = z.ln();
    let value = (1..=n)
        .map(|k| term_sign_factor(alpha, k) * survival_term_ln_magnitude(alpha, k, ln_z).exp())
        .sum::<f64>()
        * FRAC_1_PI;
    let error_bound = survival_term_ln_magnitude(alpha, n + 1, ln_z).exp() * FRAC_1_PI;
    TailSeries {
        value,
        error_bound,
        n_terms: n,
    }
}

/// CDF of one law tabulated for bulk evaluation.
///
/// Survival values and densities are stored on a uniform grid in the
/// standardized variable and joined by cubic Hermite interpolation (the
/// density is the exact slope). Beyond the table the series or quadrature
/// path of [`cdf`] is used directly.
#[derive(Debug, Clone)]
pub struct CdfTable {
    params: StableParams,
    config: EvalConfig,
    step: f64,
    survival: Vec<f64>,
    density: Vec<f64>,
}

impl CdfTable {
    pub fn new(params: StableParams, config: EvalConfig, max_z: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && max_z > step) {
            return Err(Error::InvalidParameter(format!(
                "table needs 0 < step < max_z, got step {step}, max_z {max_z}"
            )));
        }
        let standard = StableParams::standard(params.alpha)?;
        let nodes = (max_z / step).ceil() as usize + 1;
        let mut survival = Vec::with_capacity(nodes);
        let mut density_values = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let z = i as f64 * step;
            survival.push(standard_survival(z, &standard, &config)?);
            density_values.push(density(z, &standard, &config)?);
        }
        Ok(Self {
            params,
            config,
            step,
            survival,
            density: density_values,
        })
    }

    /// Default resolution for goodness-of-fit work: step 0.01 up to the crossover.
    pub fn for_params(params: StableParams, config: EvalConfig) -> Result<Self> {
        Self::new(params, config, config.tail_crossover, 0.01)
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let z = self.params.standardize(x);
        let a = z.abs();
        let pos = a / self.step;
        let i = pos.floor() as usize;
        let tail = if i + 1 < self.survival.len() {
            let t = pos - i as f64;
            let (s0, s1) = (self.survival[i], self.survival[i + 1]);
            let (d0, d1) = (
                -self.density[i] * self.step,
                -self.density[i + 1] * self.step,
            );
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * s0
                + (t3 - 2.0 * t2 + t) * d0
                + (-2.0 * t3 + 3.0 * t2) * s1
                + (t3 - t2) * d1
        } else {
            let standard = StableParams::standard(self.params.alpha)?;
            standard_survival(a, &standard, &self.config)?
        };
        Ok(if z >= 0.0 { 1.0 - tail } else { tail })
    }
}
