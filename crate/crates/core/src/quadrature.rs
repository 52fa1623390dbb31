//! Gauss–Legendre rules and an adaptive bisection integrator.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Maximum bisection depth of [`integrate_adaptive`].
pub const MAX_BISECTION_LEVELS: usize = 20;

/// Default absolute tolerance for integrals over the delivery period.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
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
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

fn rule15() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(15))
}

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]`.
///
/// Each interval is compared against the sum over its two halves; intervals are
/// bisected until the local estimate is below the length-proportional share of
/// `abs_tol`, for at most [`MAX_BISECTION_LEVELS`] levels.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    integrate_adaptive_with_breaks(f, a, b, &[], abs_tol)
}

/// Like [`integrate_adaptive`], but splits at the interior `breaks` first so that
/// kinks of piecewise-linear integrands fall on panel boundaries.
pub fn integrate_adaptive_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("non-finite integration bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let rule = rule15();
    let total_len = hi - lo;
    let mut total = 0.0;
    let mut achieved = 0.0;
    let mut failed = false;
    let mut stack: Vec<(f64, f64, f64, usize)> = edges
        .windows(2)
        .map(|w| (w[0], w[1], rule.integrate(&f, w[0], w[1]), 0))
        .collect();

    while let Some((x0, x1, whole, depth)) = stack.pop() {
        let mid = 0.5 * (x0 + x1);
        let left = rule.integrate(&f, x0, mid);
        let right = rule.integrate(&f, mid, x1);
        let refined = left + right;
        let err = (refined - whole).abs();
        let budget = abs_tol * (x1 - x0) / total_len;
        if !refined.is_finite() {
            return Err(Error::domain(format!("integrand not finite on [{x0}, {x1}]")));
        }
        if err <= budget {
            total += refined;
            achieved += err;
        } else if depth + 1 >= MAX_BISECTION_LEVELS {
            total += refined;
            achieved += err;
            failed = true;
        } else {
            stack.push((x0, mid, left, depth + 1));
            stack.push((mid, x1, right, depth + 1));
        }
    }

    if failed && achieved > abs_tol {
        return Err(Error::QuadratureNotConverged {
            achieved,
            requested: abs_tol,
        });
    }
    Ok(sign * total)
}
