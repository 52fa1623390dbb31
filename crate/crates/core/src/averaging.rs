//! Averaged volatility factors of a swap.
//!
//! With `U` distributed on the delivery period with the normalised weight
//! density, the swap volatility is `S(t) sqrt(nu)` with `S(t) = E[s(t, U)]`
//! and the market price of delivery risk is `xi(t) sqrt(nu)` with
//! `xi(t) = Var[s(t, U)] / (2 E[s(t, U)])`.
//!
//! Closed forms are used for the Samuelson and delivery-seasonal shapes under
//! uniform weights; everything else goes through adaptive Gauss–Legendre
//! quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::{
    positive, DeliveryPeriod, NormalizedWeight, SwapModel, VolStructure, WeightFunction,
};
use crate::quadrature::{integrate_adaptive_with_breaks, DEFAULT_ABS_TOL};

/// Below this value of `lambda * x` the Samuelson factors use Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// `S(t)` and `xi(t)` at one trading time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub big_s: f64,
    pub xi: f64,
}

impl Factors {
    /// `E[s^2(t, U)] = S^2 + 2 S xi`.
    pub fn second_moment(&self) -> f64 {
        self.big_s * self.big_s + 2.0 * self.big_s * self.xi
    }

    /// `Var[s(t, U)] = 2 S xi`.
    pub fn variance(&self) -> f64 {
        2.0 * self.big_s * self.xi
    }
}

/// Deterministic decomposition of the swap volatility for one contract.
#[derive(Debug, Clone)]
pub struct SwapVolDecomposition<'a> {
    vol: &'a VolStructure,
    weight: NormalizedWeight<'a>,
    dp: DeliveryPeriod,
    breaks: Vec<f64>,
}

impl<'a> SwapVolDecomposition<'a> {
    pub fn new(vol: &'a VolStructure, weight: &'a WeightFunction, dp: DeliveryPeriod) -> Result<Self> {
        vol.validate()?;
        let mut breaks = weight.breakpoints().to_vec();
        let weight = weight.normalized(dp)?;
        if let VolStructure::GeneralSeparable { surface, .. } = vol {
            breaks.extend_from_slice(surface.u_grid());
        }
        Ok(Self {
            vol,
            weight,
            dp,
            breaks,
        })
    }

    pub fn for_model(model: &'a SwapModel) -> Result<Self> {
        Self::new(model.vol(), model.weight(), *model.delivery())
    }

    pub fn delivery(&self) -> DeliveryPeriod {
        self.dp
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t > self.dp.tau1() {
            return Err(Error::domain(format!(
                "trading time t = {t} must not exceed tau1 = {}",
                self.dp.tau1()
            )));
        }
        Ok(())
    }

    /// `S(t)` and `xi(t)`, preferring closed forms.
    pub fn factors(&self, t: f64) -> Result<Factors> {
        self.check_time(t)?;
        let uniform = self.weight.weight().is_uniform();
        match self.vol {
            VolStructure::TradingSeasonal { .. } => Ok(Factors { big_s: 1.0, xi: 0.0 }),
            VolStructure::Samuelson { lambda } if uniform => {
                let (d1, d2) = d1_d2(*lambda, self.dp.length())?;
                let decay = (-lambda * (self.dp.tau1() - t)).exp();
                Ok(Factors {
                    big_s: d1 * decay,
                    xi: d2 * decay,
                })
            }
            VolStructure::DeliverySeasonal { a, b, c } if uniform => {
                let (s1, s2) = delivery_seasonal_factors(*a, *b, *c, &self.dp);
                Ok(Factors { big_s: s1, xi: s2 })
            }
            VolStructure::GeneralSeparable { surface, .. } if surface.is_constant() => Ok(Factors {
                big_s: surface.min_max().0,
                xi: 0.0,
            }),
            _ => self.factors_quadrature(t),
        }
    }

    /// `S(t)` and `xi(t)` by adaptive quadrature, regardless of closed forms.
    pub fn factors_quadrature(&self, t: f64) -> Result<Factors> {
        self.check_time(t)?;
        let (lo, hi) = (self.dp.tau1(), self.dp.tau2());
        let s = |u: f64| self.vol.s_unchecked(t, u).unwrap_or(f64::NAN);
        let w = |u: f64| self.weight.density_unchecked(u);
        let mean = integrate_adaptive_with_breaks(|u| w(u) * s(u), lo, hi, &self.breaks, DEFAULT_ABS_TOL)?;
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::domain(format!("averaged volatility factor {mean} at t = {t} is not positive")));
        }
        // two-pass variance keeps the integrand non-negative
        let var = integrate_adaptive_with_breaks(
            |u| {
                let d = s(u) - mean;
                w(u) * d * d
            },
            lo,
            hi,
            &self.breaks,
            DEFAULT_ABS_TOL * mean.max(1.0),
        )?;
        Ok(Factors {
            big_s: mean,
            xi: clamp_variance(var) / (2.0 * mean),
        })
    }

    pub fn big_s(&self, t: f64) -> Result<f64> {
        Ok(self.factors(t)?.big_s)
    }

    pub fn xi(&self, t: f64) -> Result<f64> {
        Ok(self.factors(t)?.xi)
    }

    /// Swap volatility `Sigma(t) = S(t) sqrt(nu)`.
    pub fn sigma(&self, t: f64, nu: f64) -> Result<f64> {
        Ok(self.big_s(t)? * nu.max(0.0).sqrt())
    }

    /// Market price of delivery risk `b1(t) = xi(t) sqrt(nu)`.
    pub fn b1(&self, t: f64, nu: f64) -> Result<f64> {
        Ok(self.xi(t)? * nu.max(0.0).sqrt())
    }

    /// `int V_U[sigma(s, U)] ds` along a variance path, by the trapezoidal rule.
    pub fn variance_integral(&self, times: &[f64], nu: &[f64]) -> Result<f64> {
        if times.len() != nu.len() {
            return Err(Error::domain("times and variance path differ in length"));
        }
        let mut total = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (&t, &v) in times.iter().zip(nu) {
            let g = self.factors(t)?.variance() * v;
            if let Some((t0, g0)) = prev {
                total += 0.5 * (t - t0) * (g + g0);
            }
            prev = Some((t, g));
        }
        Ok(total)
    }
}

fn clamp_variance(v: f64) -> f64 {
    if v < 0.0 && v > -1e-14 {
        0.0
    } else {
        v.max(0.0)
    }
}

/// `S(t) = E_U[s(t, U)]`, the factor multiplying `sqrt(nu)` in the swap volatility.
pub fn swap_vol_factor(vol: &VolStructure, w: &WeightFunction, dp: &DeliveryPeriod, t: f64) -> Result<f64> {
    SwapVolDecomposition::new(vol, w, *dp)?.big_s(t)
}

/// `xi(t) = Var_U[s(t, U)] / (2 E_U[s(t, U)])`.
pub fn market_price_factor(vol: &VolStructure, w: &WeightFunction, dp: &DeliveryPeriod, t: f64) -> Result<f64> {
    SwapVolDecomposition::new(vol, w, *dp)?.xi(t)
}

/// Samuelson factors for a delivery period of length `x`:
/// `d1 = (1 - e^{-lambda x}) / (lambda x)` and `d2 = ((1 + e^{-lambda x}) / 2 - d1) / 2`.
pub fn d1_d2(lambda: f64, x: f64) -> Result<(f64, f64)> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    let y = lambda * x;
    if y < SERIES_THRESHOLD {
        let d1 = 1.0 - y / 2.0 + y * y / 6.0 - y * y * y / 24.0;
        let y2 = y * y;
        let d2 = 0.5 * (y2 / 12.0 - y2 * y / 24.0 + y2 * y2 / 80.0 - y2 * y2 * y / 360.0);
        return Ok((d1, d2));
    }
    let d1 = -(-y).exp_m1() / y;
    let d2 = 0.5 * (0.5 * (1.0 + (-y).exp()) - d1);
    Ok((d1, d2))
}

/// `Var[exp(-lambda (U - tau1))]` for `U` uniform on the delivery period.
pub fn samuelson_variance(lambda: f64, dp: &DeliveryPeriod) -> Result<f64> {
    let x = dp.length();
    let (second, _) = d1_d2(2.0 * lambda, x)?;
    let (d1, _) = d1_d2(lambda, x)?;
    Ok(second - d1 * d1)
}

/// Closed-form `(S1, S2)` for `s(u) = a + b cos(2 pi (u + c))` under a uniform weight.
pub fn delivery_seasonal_factors(a: f64, b: f64, c: f64, dp: &DeliveryPeriod) -> (f64, f64) {
    let len = dp.length();
    let w = 2.0 * PI;
    let (p1, p2) = (dp.tau1() + c, dp.tau2() + c);
    let mean_cos = ((w * p2).sin() - (w * p1).sin()) / (w * len);
    let mean_cos2 = 0.5 + ((2.0 * w * p2).sin() - (2.0 * w * p1).sin()) / (4.0 * w * len);
    let s1 = a + b * mean_cos;
    // Var[s] = b^2 Var[cos]
    let var = clamp_variance(b * b * (mean_cos2 - mean_cos * mean_cos));
    (s1, 0.5 * var / s1)
}

/// Geometric minus arithmetic swap price, `F^a (exp(integral / 2) - 1)`.
pub fn swap_spread(f_arith: f64, variance_integral: f64) -> Result<f64> {
    positive("f_arith", f_arith)?;
    if !(variance_integral.is_finite() && variance_integral >= 0.0) {
        return Err(Error::domain(format!(
            "variance integral must be non-negative, got {variance_integral}"
        )));
    }
    Ok(f_arith * (0.5 * variance_integral).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Tabulated, TabulatedSurface};

    fn dp() -> DeliveryPeriod {
        DeliveryPeriod::reference()
    }

    /// Midpoint rule with 10^4 points, independent of the adaptive integrator.
    fn brute_moments(vol: &VolStructure, w: &WeightFunction, t: f64) -> (f64, f64) {
        let d = dp();
        let nw = w.normalized(d).unwrap();
        let n = 10_000;
        let h = d.length() / n as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let u = d.tau1() + (i as f64 + 0.5) * h;
            let wu = nw.density(u).unwrap() * h;
            let s = vol.s_unchecked(t, u).unwrap();
            m1 += wu * s;
            m2 += wu * s * s;
        }
        (m1, 0.5 * (m2 - m1 * m1) / m1)
    }

    #[test]
    fn trading_seasonal_factors_are_exact() {
        let vol = VolStructure::REFERENCE_TRADING;
        for t in [0.0, 0.3, 0.75] {
            assert_eq!(swap_vol_factor(&vol, &WeightFunction::Uniform, &dp(), t).unwrap(), 1.0);
            assert_eq!(market_price_factor(&vol, &WeightFunction::Uniform, &dp(), t).unwrap(), 0.0);
            let e = WeightFunction::Exponential { rate: 0.01 };
            assert_eq!(market_price_factor(&vol, &e, &dp(), t).unwrap(), 0.0);
        }
    }

    #[test]
    fn samuelson_at_delivery_start_matches_reference() {
        let vol = VolStructure::Samuelson { lambda: 1.5 };
        let s = swap_vol_factor(&vol, &WeightFunction::Uniform, &dp(), 0.75).unwrap();
        let xi = market_price_factor(&vol, &WeightFunction::Uniform, &dp(), 0.75).unwrap();
        assert_eq!(format!("{s:.4}"), "0.9400");
        assert_eq!(format!("{xi:.4}"), "0.0006");
    }

    #[test]
    fn delivery_seasonal_reference_values() {
        let vol = VolStructure::REFERENCE_DELIVERY;
        let s = swap_vol_factor(&vol, &WeightFunction::Uniform, &dp(), 0.2).unwrap();
        let xi = market_price_factor(&vol, &WeightFunction::Uniform, &dp(), 0.2).unwrap();
        // 1 + 0.4 (sin(5 pi / 3) - sin(3 pi / 2)) / (2 pi / 12)
        let expected = 1.0 + 0.4 * ((5.0 * PI / 3.0).sin() + 1.0) / (PI / 6.0);
        assert!((s - expected).abs() < 1e-14);
        assert!((s - 1.102_349_052_334_947).abs() < 1e-12);
        assert!((xi - 0.001_526_378_613_196_6).abs() < 1e-12, "{xi}");
    }

    #[test]
    fn closed_forms_agree_with_brute_force() {
        let cases = [
            VolStructure::Samuelson { lambda: 0.5 },
            VolStructure::Samuelson { lambda: 5.5 },
            VolStructure::REFERENCE_DELIVERY,
            VolStructure::DeliverySeasonal { a: 2.0, b: 1.5, c: 0.37 },
        ];
        for vol in &cases {
            for t in [0.0, 0.4, 0.75] {
                let d = SwapVolDecomposition::new(vol, &WeightFunction::Uniform, dp()).unwrap();
                let closed = d.factors(t).unwrap();
                let quad = d.factors_quadrature(t).unwrap();
                let (bs, bxi) = brute_moments(vol, &WeightFunction::Uniform, t);
                assert!(((closed.big_s - bs) / bs).abs() < 1e-8);
                assert!(((closed.xi - bxi) / bxi).abs() < 1e-6, "{} {} {}", vol.tag(), closed.xi, bxi);
                assert!(((closed.big_s - quad.big_s) / bs).abs() < 1e-10);
                assert!(((closed.xi - quad.xi) / closed.xi).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn quadrature_path_for_exponential_and_custom_weights() {
        let weights = [
            WeightFunction::Exponential { rate: 0.5 },
            WeightFunction::Custom(Tabulated::new(vec![0.7, 0.8, 0.9], vec![1.0, 3.0, 2.0]).unwrap()),
        ];
        for w in &weights {
            let vol = VolStructure::Samuelson { lambda: 3.5 };
            let d = SwapVolDecomposition::new(&vol, w, dp()).unwrap();
            let f = d.factors(0.5).unwrap();
            let (bs, bxi) = brute_moments(&vol, w, 0.5);
            assert!(((f.big_s - bs) / bs).abs() < 1e-8);
            assert!(((f.xi - bxi) / bxi).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_general_surface_has_no_delivery_risk() {
        let surface = TabulatedSurface::constant(0.8, 0.7, 0.9).unwrap();
        let vol = VolStructure::GeneralSeparable { surface, bound: 1.0 };
        let e = WeightFunction::Exponential { rate: 0.3 };
        assert_eq!(swap_vol_factor(&vol, &e, &dp(), 0.1).unwrap(), 0.8);
        assert_eq!(market_price_factor(&vol, &e, &dp(), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn d1_d2_reference_and_limits() {
        let (d1, _) = d1_d2(3.5, 1.0 / 12.0).unwrap();
        assert_eq!(format!("{d1:.4}"), "0.8674");
        let (_, d2) = d1_d2(5.5, 1.0 / 12.0).unwrap();
        assert_eq!(format!("{d2:.4}"), "0.0070");
        let (d1, d2) = d1_d2(1e-9, 1.0 / 12.0).unwrap();
        assert!((d1 - 1.0).abs() < 1e-10);
        assert!(d2.abs() < 1e-15 && d2 >= 0.0);
        assert!(d1_d2(0.0, 1.0).is_err());
        assert!(d1_d2(1.0, -1.0).is_err());
    }

    #[test]
    fn series_branch_is_continuous_with_direct_formula() {
        let x = 1.0;
        let below = d1_d2(SERIES_THRESHOLD * 0.999_999, x).unwrap();
        let above = d1_d2(SERIES_THRESHOLD * 1.000_001, x).unwrap();
        assert!((below.0 - above.0).abs() < 1e-11);
        // d2 ~ y^2 / 24 ~ 4e-14 here; the direct formula only has absolute accuracy
        assert!((below.1 - above.1).abs() < 1e-16);
    }

    #[test]
    fn samuelson_variance_reference() {
        for (lambda, v) in [(1.5, "0.0012"), (3.5, "0.0053"), (5.5, "0.0112")] {
            let got = samuelson_variance(lambda, &dp()).unwrap();
            assert_eq!(format!("{got:.4}"), v);
        }
    }

    #[test]
    fn spread_examples() {
        assert_eq!(swap_spread(30.0, 0.0).unwrap(), 0.0);
        let s = swap_spread(30.0, 0.002).unwrap();
        // series: 30 (x + x^2/2 + x^3/6 + x^4/24), x = 0.001
        let x: f64 = 0.001;
        let series = 30.0 * (x + x * x / 2.0 + x.powi(3) / 6.0 + x.powi(4) / 24.0);
        assert!((s - series).abs() < 1e-15);
        assert!((s - 0.030_015).abs() < 1e-6);
        assert!(swap_spread(30.0, -1e-3).is_err());
    }

    #[test]
    fn spread_vanishes_for_trading_seasonal() {
        let vol = VolStructure::REFERENCE_TRADING;
        let d = SwapVolDecomposition::new(&vol, &WeightFunction::Uniform, dp()).unwrap();
        let times = [0.0, 0.1, 0.2];
        let integral = d.variance_integral(&times, &[0.6, 0.7, 0.5]).unwrap();
        assert_eq!(swap_spread(30.0, integral).unwrap(), 0.0);
    }

    #[test]
    fn samuelson_variance_integrand() {
        let vol = VolStructure::Samuelson { lambda: 3.5 };
        let d = SwapVolDecomposition::new(&vol, &WeightFunction::Uniform, dp()).unwrap();
        let v = samuelson_variance(3.5, &dp()).unwrap();
        for t in [0.0, 0.5, 0.75] {
            let f = d.factors(t).unwrap();
            let expected = v * (-2.0f64 * 3.5 * (0.75 - t)).exp();
            assert!((f.variance() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_times_after_delivery_start() {
        let vol = VolStructure::REFERENCE_SAMUELSON;
        assert!(swap_vol_factor(&vol, &WeightFunction::Uniform, &dp(), 0.8).is_err());
    }
}
