//! Privacy loss, budget estimation and calibration.
//!
//! For additive noise with density `p` and neighbouring responses `mu1`,
//! `mu2`, the privacy loss of an observation `x` is
//! `ln p(x - mu1) - ln p(x - mu2)` and the pure-DP budget is its supremum
//! over `x`. Closed forms exist only for the Cauchy and Gaussian members;
//! everything here works numerically from [`crate::stable`].

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stable::{cdf, log_density, survival, EvalConfig, StableParams};

/// A privacy budget: finite, or unbounded when the loss has no supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Finite(f64),
    Unbounded,
}

impl Epsilon {
    pub fn value(&self) -> Option<f64> {
        match self {
            Epsilon::Finite(v) => Some(*v),
            Epsilon::Unbounded => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Epsilon::Finite(_))
    }
}

const UNBOUNDED: &str = "unbounded";

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Epsilon::Finite(v) => serializer.serialize_f64(*v),
            Epsilon::Unbounded => serializer.serialize_str(UNBOUNDED),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Marker(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(Epsilon::Finite(v)),
            Repr::Marker(s) if s == UNBOUNDED => Ok(Epsilon::Unbounded),
            Repr::Marker(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"{UNBOUNDED}\", got \"{s}\""
            ))),
        }
    }
}

/// Outcome of a budget search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyReport {
    pub epsilon: Epsilon,
    /// Observation attaining the budget; `None` when unbounded.
    pub argmax_x: Option<f64>,
    /// `(x, loss)` on the final search grid.
    #[serde(skip)]
    pub loss_curve: Vec<(f64, f64)>,
    pub search_radius_used: f64,
}

/// Controls the expanding-grid search for the loss supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub initial_radius: f64,
    pub growth_factor: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
    pub divergence_slope_threshold: f64,
    pub max_radius: f64,
}

impl SearchConfig {
    /// Defaults scaled to the problem: the grid starts at `10 (sensitivity + gamma)`
    /// and may grow to `1e8 gamma`.
    pub fn for_problem(gamma: f64, sensitivity: f64) -> Self {
        Self {
            initial_radius: 10.0 * (sensitivity + gamma),
            growth_factor: 4.0,
            grid_points: 2048,
            refine_tol: 1e-6,
            divergence_slope_threshold: 10.0,
            max_radius: 1e8 * gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("initial_radius", self.initial_radius),
            ("refine_tol", self.refine_tol),
            (
                "divergence_slope_threshold",
                self.divergence_slope_threshold,
            ),
            ("max_radius", self.max_radius),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.growth_factor > 1.0 && self.growth_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "growth_factor must exceed 1, got {}",
                self.growth_factor
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter(
                "grid_points must be at least 3".into(),
            ));
        }
        Ok(())
    }
}

/// `ln p(x; alpha, gamma, mu1) - ln p(x; alpha, gamma, mu2)`.
///
/// The location stored in `params` is ignored.
pub fn privacy_loss_scalar(
    x: f64,
    params: &StableParams,
    mu1: f64,
    mu2: f64,
    config: &EvalConfig,
) -> Result<f64> {
    let first = log_density(x, &params.with_location(mu1)?, config)?;
    let second = log_density(x, &params.with_location(mu2)?, config)?;
    Ok(first - second)
}

/// Loss of an observation vector under i.i.d. coordinates: the sum of the
/// per-coordinate log-ratios.
pub fn privacy_loss_vector(
    x: &[f64],
    params: &StableParams,
    f1: &[f64],
    f2: &[f64],
    config: &EvalConfig,
) -> Result<f64> {
    check_dimensions(x, f1, f2)?;
    x.iter()
        .zip(f1.iter().zip(f2))
        .map(|(&xi, (&a, &b))| privacy_loss_scalar(xi, params, a, b, config))
        .sum()
}

/// `m` times the largest per-coordinate loss magnitude: a loose upper bound
/// on `|privacy_loss_vector|`.
pub fn privacy_loss_vector_bound(
    x: &[f64],
    params: &StableParams,
    f1: &[f64],
    f2: &[f64],
    config: &EvalConfig,
) -> Result<f64> {
    check_dimensions(x, f1, f2)?;
    let mut largest = 0.0f64;
    for (&xi, (&a, &b)) in x.iter().zip(f1.iter().zip(f2)) {
        largest = largest.max(privacy_loss_scalar(xi, params, a, b, config)?.abs());
    }
    Ok(x.len() as f64 * largest)
}

fn check_dimensions(x: &[f64], f1: &[f64], f2: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput("observation vector must be non-empty"));
    }
    for other in [f1, f2] {
        if other.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: other.len(),
            });
        }
    }
    Ok(())
}

struct LossGrid {
    xs: Vec<f64>,
    losses: Vec<f64>,
}

impl LossGrid {
    fn evaluate(
        center: f64,
        radius: f64,
        points: usize,
        loss: &(impl Fn(f64) -> Result<f64> + Sync),
    ) -> Result<Self> {
        let step = 2.0 * radius / (points - 1) as f64;
        let xs: Vec<f64> = (0..points)
            .map(|i| {
                if i + 1 == points {
                    center + radius
                } else {
                    center - radius + i as f64 * step
                }
            })
            .collect();
        let losses = xs
            .par_iter()
            .map(|&x| loss(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { xs, losses })
    }

    fn boundary_magnitude(&self) -> f64 {
        let n = self.losses.len();
        self.losses[0].abs().max(self.losses[n - 1].abs())
    }

    fn inner_magnitude(&self) -> f64 {
        let n = self.losses.len();
        self.losses[1].abs().max(self.losses[n - 2].abs())
    }

    fn max_magnitude(&self) -> f64 {
        self.losses.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Index of the largest value of `sign * loss`.
    fn extreme_index(&self, sign: f64) -> usize {
        let mut best = 0;
        for (i, v) in self.losses.iter().enumerate() {
            if sign * v > sign * self.losses[best] {
                best = i;
            }
        }
        best
    }

    fn curve(&self) -> Vec<(f64, f64)> {
        self.xs
            .iter()
            .copied()
            .zip(self.losses.iter().copied())
            .collect()
    }
}

/// Privacy budget of the SaS mechanism for a scalar query with sensitivity
/// `sensitivity`, using the worst-case neighbour pair `(0, sensitivity)`.
///
/// A symmetric grid about `sensitivity / 2` is widened by
/// `search.growth_factor` until the boundary loss is below half the grid
/// maximum and still falling, then the extremes are refined by golden
/// section. Losses that keep growing past `divergence_slope_threshold` times
/// their initial boundary value are reported as [`Epsilon::Unbounded`].
pub fn estimate_epsilon(
    alpha: f64,
    gamma: f64,
    sensitivity: f64,
    search: &SearchConfig,
    config: &EvalConfig,
) -> Result<PrivacyReport> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    search.validate()?;
    config.validate()?;
    let params = StableParams::new(alpha, gamma, 0.0)?;
    let loss = |x: f64| privacy_loss_scalar(x, &params, 0.0, sensitivity, config);
    let center = 0.5 * sensitivity;

    let mut radius = search.initial_radius;
    let mut initial_boundary: Option<f64> = None;
    let mut previous_boundary: Option<f64> = None;
    loop {
        let grid = LossGrid::evaluate(center, radius, search.grid_points, &loss)?;
        let boundary = grid.boundary_magnitude();
        if boundary < 0.5 * grid.max_magnitude() && boundary < grid.inner_magnitude() {
            return refine_extremes(&grid, &loss, search.refine_tol, radius);
        }
        let first = *initial_boundary.get_or_insert(boundary);
        let growing = previous_boundary.is_some_and(|p| boundary > p);
        if growing && boundary > search.divergence_slope_threshold * first {
            return Ok(PrivacyReport {
                epsilon: Epsilon::Unbounded,
                argmax_x: None,
                loss_curve: grid.curve(),
                search_radius_used: radius,
            });
        }
        if radius * search.growth_factor > search.max_radius {
            return Err(Error::SearchExhausted { radius });
        }
        previous_boundary = Some(boundary);
        radius *= search.growth_factor;
    }
}

fn refine_extremes(
    grid: &LossGrid,
    loss: &impl Fn(f64) -> Result<f64>,
    tol: f64,
    radius: f64,
) -> Result<PrivacyReport> {
    let n = grid.xs.len();
    let bracket = |i: usize| (grid.xs[i.saturating_sub(1)], grid.xs[(i + 1).min(n - 1)]);

    let i_max = grid.extreme_index(1.0);
    let (a, b) = bracket(i_max);
    let (x_pos, v_pos) = golden_section_max(loss, a, b, tol)?;
    let (x_pos, v_pos) = best_of((x_pos, v_pos), (grid.xs[i_max], grid.losses[i_max]));

    let i_min = grid.extreme_index(-1.0);
    let (a, b) = bracket(i_min);
    let (x_neg, v_neg) = golden_section_max(|x| loss(x).map(|v| -v), a, b, tol)?;
    let (x_neg, v_neg) = best_of((x_neg, v_neg), (grid.xs[i_min], -grid.losses[i_min]));

    // The two extremes mirror each other about the midpoint; prefer the
    // positive-loss side unless the other is larger beyond the refinement tolerance.
    let (argmax, epsilon) = if v_pos >= v_neg - tol {
        (x_pos, v_pos.max(v_neg))
    } else {
        (x_neg, v_neg)
    };
    Ok(PrivacyReport {
        epsilon: Epsilon::Finite(epsilon),
        argmax_x: Some(argmax),
        loss_curve: grid.curve(),
        search_radius_used: radius,
    })
}

fn best_of(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    if b.1 > a.1 {
        b
    } else {
        a
    }
}

/// Maximizes a unimodal `f` on `[a, b]` until the bracket is narrower than `tol`.
fn golden_section_max(
    f: impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

const CALIBRATION_RATIO_RANGE: (f64, f64) = (1e-3, 1e3);

/// Scale `gamma` at which the SaS mechanism spends exactly `target_epsilon`.
///
/// The budget depends only on the standardized sensitivity
/// `r = sensitivity / gamma` and increases with it, so `ln r` is bracketed
/// on `[ln 1e-3, ln 1e3]` and narrowed by false position with the Illinois
/// modification until the budget is within `tol` of the target.
pub fn calibrate_gamma(alpha: f64, sensitivity: f64, target_epsilon: f64, tol: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "calibration needs a pure-DP alpha in [1, 2), got {alpha}"
        )));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    if !(target_epsilon > 0.0 && target_epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target epsilon must be positive, got {target_epsilon}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let config = EvalConfig::default();
    let budget = |ln_ratio: f64| -> Result<f64> {
        let ratio = ln_ratio.exp();
        let report = estimate_epsilon(
            alpha,
            1.0,
            ratio,
            &SearchConfig::for_problem(1.0, ratio),
            &config,
        )?;
        report.epsilon.value().ok_or_else(|| {
            Error::NonConvergence(format!("budget unbounded at alpha {alpha}, ratio {ratio}"))
        })
    };

    let (mut a, mut b) = (
        CALIBRATION_RATIO_RANGE.0.ln(),
        CALIBRATION_RATIO_RANGE.1.ln(),
    );
    let (eps_a, eps_b) = (budget(a)?, budget(b)?);
    if !(eps_a <= target_epsilon && target_epsilon <= eps_b) {
        return Err(Error::BracketFailure {
            target: target_epsilon,
            low: eps_a,
            high: eps_b,
        });
    }
    let (mut fa, mut fb) = (eps_a - target_epsilon, eps_b - target_epsilon);
    if fa.abs() < tol {
        return Ok(sensitivity / a.exp());
    }
    if fb.abs() < tol {
        return Ok(sensitivity / b.exp());
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = budget(x)? - target_epsilon;
        if fx.abs() < tol || (b - a).abs() < 1e-14 {
            return Ok(sensitivity / x.exp());
        }
        if fx * fb > 0.0 {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NonConvergence(format!(
        "calibration for epsilon {target_epsilon} did not reach tolerance {tol}"
    )))
}

/// Smallest `delta` such that the neighbour pair `(0, sensitivity)` satisfies
/// `(epsilon, delta)`-DP: `int max(p1(x) - e^epsilon p2(x), 0) dx`.
///
/// The set where the loss exceeds `epsilon` is located on a grid, its
/// endpoints refined by bisection, and the integral evaluated exactly from
/// the two distribution functions on each interval.
pub fn delta_for_epsilon(
    params: &StableParams,
    sensitivity: f64,
    epsilon: f64,
    config: &EvalConfig,
) -> Result<f64> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be non-negative and finite, got {epsilon}"
        )));
    }
    let first = params.with_location(0.0)?;
    let second = params.with_location(sensitivity)?;
    let excess =
        |x: f64| privacy_loss_scalar(x, &first, 0.0, sensitivity, config).map(|l| l - epsilon);
    let search = SearchConfig::for_problem(params.gamma(), sensitivity);
    let center = 0.5 * sensitivity;

    // Heavy tails: the loss decays to zero, so for epsilon > 0 the grid can
    // be widened until its ends are outside the excess set.
    let mut radius = search.initial_radius;
    let mut grid = LossGrid::evaluate(center, radius, search.grid_points, &excess)?;
    let n = search.grid_points;
    while params.alpha() < 2.0
        && epsilon > 0.0
        && (grid.losses[0] > 0.0 || grid.losses[n - 1] > 0.0)
        && radius * search.growth_factor <= search.max_radius
    {
        radius *= search.growth_factor;
        grid = LossGrid::evaluate(center, radius, n, &excess)?;
    }

    let mut delta = 0.0;
    let mut start = (grid.losses[0] > 0.0).then_some(f64::NEG_INFINITY);
    for i in 1..n {
        let (prev, cur) = (grid.losses[i - 1], grid.losses[i]);
        if (prev > 0.0) != (cur > 0.0) {
            let root = bisect_sign_change(&excess, grid.xs[i - 1], grid.xs[i], prev)?;
            match start.take() {
                Some(a) => delta += interval_excess(a, root, &first, &second, epsilon, config)?,
                None => start = Some(root),
            }
        }
    }
    if let Some(a) = start {
        delta += interval_excess(a, f64::INFINITY, &first, &second, epsilon, config)?;
    }
    Ok(delta.clamp(0.0, 1.0))
}

fn bisect_sign_change(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    fa: f64,
) -> Result<f64> {
    let left_positive = fa > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid)? > 0.0) == left_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `P1([a, b]) - e^epsilon P2([a, b])`.
fn interval_excess(
    a: f64,
    b: f64,
    first: &StableParams,
    second: &StableParams,
    epsilon: f64,
    config: &EvalConfig,
) -> Result<f64> {
    Ok(interval_mass(a, b, first, config)? - epsilon.exp() * interval_mass(a, b, second, config)?)
}

fn interval_mass(a: f64, b: f64, law: &StableParams, config: &EvalConfig) -> Result<f64> {
    let upper = |x: f64| {
        if x == f64::INFINITY {
            Ok(0.0)
        } else {
            survival(x, law, config)
        }
    };
    let lower = |x: f64| {
        if x == f64::NEG_INFINITY {
            Ok(0.0)
        } else {
            cdf(x, law, config)
        }
    };
    if a >= law.mu() {
        Ok(upper(a)? - upper(b)?)
    } else {
        Ok(lower(b)? - lower(a)?)
    }
}

/// The two affine constraints `a p + b q >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub p_coefficient: f64,
    pub q_coefficient: f64,
}

impl AffineConstraint {
    pub fn holds(&self, p: f64, q: f64) -> bool {
        self.p_coefficient * p + self.q_coefficient * q >= 1.0
    }
}

/// Limits on an adversary's false-positive rate `p` and false-negative rate
/// `q` when distinguishing neighbours through an `epsilon`-DP mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisBound {
    pub epsilon: f64,
    /// `2 / (1 + e^epsilon)`.
    pub p_plus_q_lower: f64,
    /// `p + e^epsilon q >= 1` and `e^epsilon p + q >= 1`.
    pub single_inequalities: (AffineConstraint, AffineConstraint),
}

impl HypothesisBound {
    pub fn admits(&self, p: f64, q: f64) -> bool {
        self.single_inequalities.0.holds(p, q) && self.single_inequalities.1.holds(p, q)
    }
}

pub fn hypothesis_bounds(epsilon: f64) -> Result<HypothesisBound> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let e = epsilon.exp();
    Ok(HypothesisBound {
        epsilon,
        p_plus_q_lower: 2.0 / (1.0 + e),
        single_inequalities: (
            AffineConstraint {
                p_coefficient: 1.0,
                q_coefficient: e,
            },
            AffineConstraint {
                p_coefficient: e,
                q_coefficient: 1.0,
            },
        ),
    })
}

/// Largest budget that keeps `p + q >= p_bound + q_bound`: `ln(2 / (p + q) - 1)`.
///
/// Fails unless `0 < p_bound + q_bound < 1`; at or above one no positive
/// budget satisfies the bound.
pub fn epsilon_for_error_rates(p_bound: f64, q_bound: f64) -> Result<f64> {
    for (name, v) in [("p_bound", p_bound), ("q_bound", q_bound)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    let total = p_bound + q_bound;
    if total >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "p_bound + q_bound = {total} >= 1: no positive epsilon satisfies the bound"
        )));
    }
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "p_bound + q_bound = 0 places no constraint on epsilon".into(),
        ));
    }
    Ok((2.0 / total - 1.0).ln())
}
