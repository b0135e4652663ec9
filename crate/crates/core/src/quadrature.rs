//! Fixed-order Gauss-Legendre panels used by the density and CDF integrals.
//!
//! Each panel is integrated with a 12-point rule and a 6-point rule; the
//! difference of the two is the (pessimistic) error estimate of the panel.

use std::f64::consts::PI;
use std::sync::LazyLock;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n from the Chebyshev-like initial guess.
    pub(crate) fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub(crate) fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static HIGH: LazyLock<GaussLegendre> = LazyLock::new(|| GaussLegendre::new(12));
static LOW: LazyLock<GaussLegendre> = LazyLock::new(|| GaussLegendre::new(6));

/// Number of geometric refinement levels toward t = 0 in the first panel.
const GRADED_LEVELS: usize = 10;
const GRADED_RATIO: f64 = 0.25;

/// Integral over one panel and its error estimate.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PanelSum {
    pub value: f64,
    pub error: f64,
}

impl PanelSum {
    fn add(&mut self, f: &impl Fn(f64) -> f64, a: f64, b: f64) {
        let hi = HIGH.integrate(f, a, b);
        let lo = LOW.integrate(f, a, b);
        self.value += hi;
        self.error += (hi - lo).abs();
    }
}

/// Composite rule over `[0, upper]` with `panels` equal panels.
///
/// The first panel is graded geometrically toward the origin so that
/// integrands with a `t^alpha` cusp at zero keep full panel accuracy.
pub(crate) fn composite_from_origin<F: Fn(f64) -> f64>(
    f: &F,
    upper: f64,
    panels: usize,
) -> PanelSum {
    let h = upper / panels as f64;
    let mut sum = PanelSum::default();
    let mut right = h;
    for _ in 0..GRADED_LEVELS {
        let left = right * GRADED_RATIO;
        sum.add(f, left, right);
        right = left;
    }
    sum.add(f, 0.0, right);
    for i in 1..panels {
        let a = i as f64 * h;
        let b = if i + 1 == panels { upper } else { a + h };
        sum.add(f, a, b);
    }
    sum
}
