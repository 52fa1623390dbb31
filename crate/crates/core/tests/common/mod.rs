//! Reference formulas used as oracles by the integration tests.
//!
//! Nothing here calls into the library, so agreement with it is a real check.

#![allow(dead_code)]

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

/// Composite Simpson rule with `n` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Heston `(C, D)` for time to maturity `tau` in the form without branch switching.
///
/// `u` is `1/2` for the asset leg and `-1/2` for the strike leg, `b` is
/// `kappa - rho sigma` and `kappa` respectively.
#[allow(clippy::too_many_arguments)]
pub fn heston_cd(u: f64, b: f64, kappa: f64, theta: f64, sigma: f64, rho: f64, tau: f64, phi: f64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let s2 = sigma * sigma;
    let bm = b - rho * sigma * phi * i;
    let d = (bm * bm - s2 * (2.0 * u * phi * i - phi * phi)).sqrt();
    let g = (bm - d) / (bm + d);
    let e = (-d * tau).exp();
    let dd = (bm - d) / s2 * (1.0 - e) / (1.0 - g * e);
    let cc = kappa * theta / s2 * ((bm - d) * tau - 2.0 * ((1.0 - g * e) / (1.0 - g)).ln());
    (cc, dd)
}

/// Lognormal call and put on a forward.
pub fn black76(f: f64, k: f64, total_var: f64, df: f64) -> (f64, f64) {
    let n = Normal::standard();
    let sd = total_var.sqrt();
    let d1 = ((f / k).ln() + 0.5 * total_var) / sd;
    let d2 = d1 - sd;
    let call = df * (f * n.cdf(d1) - k * n.cdf(d2));
    let put = df * (k * n.cdf(-d2) - f * n.cdf(-d1));
    (call, put)
}

/// Uniform-weight swap volatility factor of the Samuelson shape.
pub fn samuelson_swap_factor(lambda: f64, tau1: f64, tau2: f64, t: f64) -> f64 {
    let len = tau2 - tau1;
    (1.0 - (-lambda * len).exp()) / (lambda * len) * (-lambda * (tau1 - t)).exp()
}

/// Uniform-weight swap volatility factor of the delivery-seasonal shape.
pub fn delivery_seasonal_swap_factor(a: f64, b: f64, c: f64, tau1: f64, tau2: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI;
    a + b * ((w * (tau2 + c)).sin() - (w * (tau1 + c)).sin()) / (w * (tau2 - tau1))
}

/// Mean, variance over `U` uniform on `(tau1, tau2]` of `g(U)` by the midpoint rule.
pub fn uniform_moments(g: impl Fn(f64) -> f64, tau1: f64, tau2: f64, n: usize) -> (f64, f64) {
    let h = (tau2 - tau1) / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| g(tau1 + (i as f64 + 0.5) * h)).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Composite five-point Gauss–Legendre rule; never evaluates `f` at the end points.
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            X.iter().zip(&W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}
