//! Model parameters, delivery-period geometry, weight functions and the
//! separable futures-volatility factor `s(t, u)`.
//!
//! A futures contract delivering at `u` has volatility `s(t, u) * sqrt(nu(t))`
//! where `nu` is a CIR variance. The four supported shapes of `s` are listed in
//! [`VolStructure`]. All times are year fractions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CIR variance and market parameters.
///
/// `theta` is the constant mean-reversion level. For
/// [`VolStructure::TradingSeasonal`] the level is time dependent and is taken
/// from the structure instead; see [`SwapModel::theta_at`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HestonParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma_vv: f64,
    pub rho: f64,
    pub nu0: f64,
    pub f0: f64,
    pub r: f64,
}

impl HestonParams {
    /// Joint parameters of the reference simulation set.
    pub const REFERENCE: HestonParams = HestonParams {
        kappa: 3.0,
        theta: 0.6,
        sigma_vv: 0.4,
        rho: -0.3,
        nu0: 0.6,
        f0: 30.0,
        r: 0.01,
    };

    pub fn validate(&self) -> Result<()> {
        positive("heston.kappa", self.kappa)?;
        positive("heston.theta", self.theta)?;
        positive("heston.nu0", self.nu0)?;
        positive("heston.f0", self.f0)?;
        non_negative("heston.sigma", self.sigma_vv)?;
        non_negative("heston.r", self.r)?;
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::invalid("heston.rho", format!("must lie in (-1, 1), got {}", self.rho)));
        }
        Ok(())
    }
}

impl Default for HestonParams {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Delivery period `(tau1, tau2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPeriod")]
pub struct DeliveryPeriod {
    tau1: f64,
    tau2: f64,
}

impl DeliveryPeriod {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        positive("delivery.tau1", tau1)?;
        if !(tau2.is_finite() && tau2 > tau1) {
            return Err(Error::invalid(
                "delivery.tau2",
                format!("must exceed tau1 = {tau1}, got {tau2}"),
            ));
        }
        Ok(Self { tau1, tau2 })
    }

    /// October delivery seen from January: `(9/12, 10/12]`.
    pub fn reference() -> Self {
        Self {
            tau1: 0.75,
            tau2: 5.0 / 6.0,
        }
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn length(&self) -> f64 {
        self.tau2 - self.tau1
    }

    /// True for `u` in the half-open period `(tau1, tau2]`.
    pub fn contains(&self, u: f64) -> bool {
        u > self.tau1 && u <= self.tau2
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeriod {
    #[serde(deserialize_with = "year_fraction")]
    tau1: f64,
    #[serde(deserialize_with = "year_fraction")]
    tau2: f64,
}

impl TryFrom<RawPeriod> for DeliveryPeriod {
    type Error = Error;

    fn try_from(raw: RawPeriod) -> Result<Self> {
        DeliveryPeriod::new(raw.tau1, raw.tau2)
    }
}

/// Piecewise-linear function given on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTabulated")]
pub struct Tabulated {
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTabulated {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawTabulated> for Tabulated {
    type Error = Error;

    fn try_from(raw: RawTabulated) -> Result<Self> {
        Tabulated::new(raw.grid, raw.values)
    }
}

impl Tabulated {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("grid", "needs at least two points"));
        }
        if grid.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("length {} does not match grid length {}", values.len(), grid.len()),
            ));
        }
        check_increasing("grid", &grid)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.grid[0] <= lo && hi <= self.grid[self.grid.len() - 1]
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (i, frac) = locate(&self.grid, x)?;
        Some(lerp(self.values[i], self.values[i + 1], frac))
    }

    /// Exact integral of the interpolant over `[a, b]` (inside the grid).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for (xs, ys) in self.grid.windows(2).zip(self.values.windows(2)) {
            let l = xs[0].max(a);
            let r = xs[1].min(b);
            if r <= l {
                continue;
            }
            let at = |x: f64| lerp(ys[0], ys[1], (x - xs[0]) / (xs[1] - xs[0]));
            total += 0.5 * (r - l) * (at(l) + at(r));
        }
        total
    }
}

/// Bilinear surface `s(t, u)` on a `t`-grid times `u`-grid.
///
/// A single-point `t` grid means the surface does not depend on trading time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSurface")]
pub struct TabulatedSurface {
    t_grid: Vec<f64>,
    u_grid: Vec<f64>,
    /// Row-major: `values[i][j] = s(t_grid[i], u_grid[j])`.
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    t_grid: Vec<f64>,
    u_grid: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawSurface> for TabulatedSurface {
    type Error = Error;

    fn try_from(raw: RawSurface) -> Result<Self> {
        TabulatedSurface::new(raw.t_grid, raw.u_grid, raw.values)
    }
}

impl TabulatedSurface {
    pub fn new(t_grid: Vec<f64>, u_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(Error::invalid("model.t_grid", "must not be empty"));
        }
        if u_grid.len() < 2 {
            return Err(Error::invalid("model.u_grid", "needs at least two points"));
        }
        check_increasing("model.t_grid", &t_grid)?;
        check_increasing("model.u_grid", &u_grid)?;
        if values.len() != t_grid.len() || values.iter().any(|row| row.len() != u_grid.len()) {
            return Err(Error::invalid(
                "model.values",
                format!("expected a {} x {} table", t_grid.len(), u_grid.len()),
            ));
        }
        Ok(Self {
            t_grid,
            u_grid,
            values,
        })
    }

    /// Constant surface, independent of both arguments.
    pub fn constant(value: f64, u_lo: f64, u_hi: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![u_lo, u_hi], vec![vec![value, value]])
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn u_grid(&self) -> &[f64] {
        &self.u_grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.min_max();
        lo == hi
    }

    pub fn depends_on_t(&self) -> bool {
        self.t_grid.len() > 1
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        let (j, fu) = locate(&self.u_grid, u).ok_or_else(|| {
            Error::domain(format!(
                "u = {u} outside surface grid [{}, {}]",
                self.u_grid[0],
                self.u_grid[self.u_grid.len() - 1]
            ))
        })?;
        let row = |i: usize| lerp(self.values[i][j], self.values[i][j + 1], fu);
        if !self.depends_on_t() {
            return Ok(row(0));
        }
        let (i, ft) = locate(&self.t_grid, t).ok_or_else(|| {
            Error::domain(format!(
                "t = {t} outside surface grid [{}, {}]",
                self.t_grid[0],
                self.t_grid[self.t_grid.len() - 1]
            ))
        })?;
        Ok(lerp(row(i), row(i + 1), ft))
    }
}

/// Unnormalised settlement weight `w_hat(u)` on the delivery period.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightFunction {
    /// One-time settlement, `w_hat = 1`.
    #[default]
    Uniform,
    /// Continuous settlement, `w_hat(u) = exp(-rate * u)`.
    Exponential { rate: f64 },
    /// Tabulated positive weight, linearly interpolated.
    Custom(Tabulated),
}

impl WeightFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFunction::Uniform => Ok(()),
            WeightFunction::Exponential { rate } => non_negative("weight.rate", *rate),
            WeightFunction::Custom(tab) => {
                if tab.values().iter().any(|&v| v <= 0.0) {
                    return Err(Error::invalid("weight.values", "custom weight must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Checks the weight against a concrete delivery period.
    pub fn validate_for(&self, dp: &DeliveryPeriod) -> Result<()> {
        self.validate()?;
        if let WeightFunction::Custom(tab) = self {
            if !tab.covers(dp.tau1(), dp.tau2()) {
                return Err(Error::invalid(
                    "weight.grid",
                    format!("must cover the delivery period [{}, {}]", dp.tau1(), dp.tau2()),
                ));
            }
        }
        Ok(())
    }

    /// True when the normalised density is constant on the period.
    pub fn is_uniform(&self) -> bool {
        match self {
            WeightFunction::Uniform => true,
            WeightFunction::Exponential { rate } => *rate == 0.0,
            WeightFunction::Custom(_) => false,
        }
    }

    /// Knots of a custom weight, used as quadrature break points.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            WeightFunction::Custom(tab) => tab.grid(),
            _ => &[],
        }
    }

    /// Binds the weight to a delivery period, precomputing its normaliser.
    pub fn normalized(&self, dp: DeliveryPeriod) -> Result<NormalizedWeight<'_>> {
        self.validate_for(&dp)?;
        let len = dp.length();
        let scale = match self {
            WeightFunction::Uniform => 1.0 / len,
            WeightFunction::Exponential { rate } if *rate == 0.0 => 1.0 / len,
            // w(u) = rate * exp(-rate (u - tau1)) / (1 - exp(-rate * len))
            WeightFunction::Exponential { rate } => rate / (-(-rate * len).exp_m1()),
            WeightFunction::Custom(tab) => 1.0 / tab.integral(dp.tau1(), dp.tau2()),
        };
        Ok(NormalizedWeight {
            weight: self,
            dp,
            scale,
        })
    }
}

/// A weight function normalised to integrate to one over its delivery period.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedWeight<'a> {
    weight: &'a WeightFunction,
    dp: DeliveryPeriod,
    scale: f64,
}

impl<'a> NormalizedWeight<'a> {
    pub fn delivery(&self) -> DeliveryPeriod {
        self.dp
    }

    pub fn weight(&self) -> &'a WeightFunction {
        self.weight
    }

    /// Density at `u`, without checking that `u` lies in the period.
    pub(crate) fn density_unchecked(&self, u: f64) -> f64 {
        match self.weight {
            WeightFunction::Uniform => self.scale,
            WeightFunction::Exponential { rate } => self.scale * (-rate * (u - self.dp.tau1())).exp(),
            WeightFunction::Custom(tab) => self.scale * tab.eval(u).unwrap_or(f64::NAN),
        }
    }

    pub fn density(&self, u: f64) -> Result<f64> {
        if !self.dp.contains(u) {
            return Err(Error::domain(format!(
                "u = {u} outside delivery period ({}, {}]",
                self.dp.tau1(),
                self.dp.tau2()
            )));
        }
        Ok(self.density_unchecked(u))
    }
}

/// Normalised delivery weight `w(u, tau1, tau2)`.
pub fn weight_density(w: &WeightFunction, dp: &DeliveryPeriod, u: f64) -> Result<f64> {
    w.normalized(*dp)?.density(u)
}

/// Deterministic shape of the futures volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolStructure {
    /// Seasonal mean-reversion level `theta(t) = alpha * exp(beta * sin(2 pi (t + gamma)))`, `s = 1`.
    TradingSeasonal { alpha: f64, beta: f64, gamma: f64 },
    /// Samuelson decay `s(t, u) = exp(-lambda (u - t))`.
    Samuelson { lambda: f64 },
    /// Delivery seasonality `s(u) = a + b cos(2 pi (u + c))`.
    DeliverySeasonal { a: f64, b: f64, c: f64 },
    /// Tabulated positive `s(t, u)` bounded by `bound`.
    GeneralSeparable { surface: TabulatedSurface, bound: f64 },
}

impl Default for VolStructure {
    fn default() -> Self {
        VolStructure::Samuelson { lambda: 3.5 }
    }
}

impl VolStructure {
    pub const REFERENCE_TRADING: VolStructure = VolStructure::TradingSeasonal {
        alpha: 0.6,
        beta: 0.7,
        gamma: 0.2,
    };
    pub const REFERENCE_SAMUELSON: VolStructure = VolStructure::Samuelson { lambda: 3.5 };
    pub const REFERENCE_DELIVERY: VolStructure = VolStructure::DeliverySeasonal { a: 1.0, b: 0.4, c: 0.0 };

    pub fn tag(&self) -> &'static str {
        match self {
            VolStructure::TradingSeasonal { .. } => "trading_seasonal",
            VolStructure::Samuelson { .. } => "samuelson",
            VolStructure::DeliverySeasonal { .. } => "delivery_seasonal",
            VolStructure::GeneralSeparable { .. } => "general_separable",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VolStructure::TradingSeasonal { alpha, beta, gamma } => {
                positive("model.alpha", *alpha)?;
                positive("model.beta", *beta)?;
                unit_interval("model.gamma", *gamma)
            }
            VolStructure::Samuelson { lambda } => positive("model.lambda", *lambda),
            VolStructure::DeliverySeasonal { a, b, c } => {
                positive("model.b", *b)?;
                if !(a.is_finite() && a > b) {
                    return Err(Error::invalid("model.a", format!("must exceed b = {b}, got {a}")));
                }
                unit_interval("model.c", *c)
            }
            VolStructure::GeneralSeparable { surface, bound } => {
                positive("model.bound", *bound)?;
                let (lo, hi) = surface.min_max();
                if lo <= 0.0 {
                    return Err(Error::invalid("model.values", format!("s(t,u) must be positive, min is {lo}")));
                }
                if hi > *bound {
                    return Err(Error::invalid(
                        "model.values",
                        format!("s(t,u) must not exceed bound {bound}, max is {hi}"),
                    ));
                }
                Ok(())
            }
        }
    }

    fn validate_for(&self, dp: &DeliveryPeriod) -> Result<()> {
        self.validate()?;
        if let VolStructure::GeneralSeparable { surface, .. } = self {
            let u = surface.u_grid();
            if !(u[0] <= dp.tau1() && dp.tau2() <= u[u.len() - 1]) {
                return Err(Error::invalid("model.u_grid", "must cover the delivery period"));
            }
            let t = surface.t_grid();
            if surface.depends_on_t() && !(t[0] <= 0.0 && dp.tau1() <= t[t.len() - 1]) {
                return Err(Error::invalid("model.t_grid", "must cover the trading horizon [0, tau1]"));
            }
        }
        Ok(())
    }

    /// `s(t, u)` without range checks on `t <= u`.
    pub(crate) fn s_unchecked(&self, t: f64, u: f64) -> Result<f64> {
        Ok(match self {
            VolStructure::TradingSeasonal { .. } => 1.0,
            VolStructure::Samuelson { lambda } => (-lambda * (u - t)).exp(),
            VolStructure::DeliverySeasonal { a, b, c } => a + b * (2.0 * PI * (u + c)).cos(),
            VolStructure::GeneralSeparable { surface, .. } => surface.eval(t, u)?,
        })
    }
}

/// Separable deterministic volatility factor `s(t, u)` for delivery time `u`.
pub fn eval_s(vol: &VolStructure, t: f64, u: f64) -> Result<f64> {
    vol.validate()?;
    if !(t.is_finite() && u.is_finite()) {
        return Err(Error::domain("non-finite time argument"));
    }
    if t > u {
        return Err(Error::domain(format!("trading time t = {t} after delivery time u = {u}")));
    }
    vol.s_unchecked(t, u)
}

/// European call written on the swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSpec {
    pub strike: f64,
    #[serde(deserialize_with = "year_fraction")]
    pub exercise: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, exercise: f64, dp: &DeliveryPeriod) -> Result<Self> {
        let spec = Self { strike, exercise };
        spec.validate(dp)?;
        Ok(spec)
    }

    pub fn validate(&self, dp: &DeliveryPeriod) -> Result<()> {
        positive("option.strike", self.strike)?;
        if !(self.exercise > 0.0 && self.exercise < dp.tau1()) {
            return Err(Error::invalid(
                "option.exercise",
                format!("must lie in (0, tau1 = {}), got {}", dp.tau1(), self.exercise),
            ));
        }
        Ok(())
    }
}

/// A complete single-swap model: variance dynamics, volatility shape,
/// settlement weight and delivery period.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapModel {
    params: HestonParams,
    vol: VolStructure,
    weight: WeightFunction,
    delivery: DeliveryPeriod,
}

impl SwapModel {
    pub fn new(
        params: HestonParams,
        vol: VolStructure,
        weight: WeightFunction,
        delivery: DeliveryPeriod,
    ) -> Result<Self> {
        params.validate()?;
        vol.validate_for(&delivery)?;
        weight.validate_for(&delivery)?;
        Ok(Self {
            params,
            vol,
            weight,
            delivery,
        })
    }

    /// Reference configuration for one of the three volatility shapes, uniform weight.
    pub fn reference(vol: VolStructure) -> Result<Self> {
        Self::new(HestonParams::REFERENCE, vol, WeightFunction::Uniform, DeliveryPeriod::reference())
    }

    pub fn params(&self) -> &HestonParams {
        &self.params
    }

    pub fn vol(&self) -> &VolStructure {
        &self.vol
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn delivery(&self) -> &DeliveryPeriod {
        &self.delivery
    }

    pub fn with_params(&self, params: HestonParams) -> Result<Self> {
        Self::new(params, self.vol.clone(), self.weight.clone(), self.delivery)
    }

    /// Mean-reversion level at trading time `t`.
    pub fn theta_at(&self, t: f64) -> f64 {
        match self.vol {
            VolStructure::TradingSeasonal { alpha, beta, gamma } => {
                alpha * (beta * (2.0 * PI * (t + gamma)).sin()).exp()
            }
            _ => self.params.theta,
        }
    }

    /// Lower bound of `theta` used by the Feller check.
    pub fn theta_min(&self) -> f64 {
        match self.vol {
            VolStructure::TradingSeasonal { alpha, beta, .. } => alpha * (-beta).exp(),
            _ => self.params.theta,
        }
    }

    /// Minimum of `theta` sampled every `1e-4` years on `[0, horizon]`.
    pub fn theta_min_on_grid(&self, horizon: f64) -> f64 {
        let n = (horizon / 1e-4).ceil().max(1.0) as usize;
        (0..=n)
            .map(|i| self.theta_at(horizon * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Parses a year fraction given as a number, a decimal string or a ratio such as `"5/6"`.
pub fn parse_year_fraction(text: &str) -> Option<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => num.trim().parse::<f64>().ok()? / den.trim().parse::<f64>().ok()?,
        None => text.parse().ok()?,
    };
    value.is_finite().then_some(value)
}

pub(crate) fn year_fraction<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Time {
        Number(f64),
        Text(String),
    }
    match Time::deserialize(d)? {
        Time::Number(v) => Ok(v),
        Time::Text(s) => parse_year_fraction(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("cannot read `{s}` as a year fraction"))),
    }
}

fn locate(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = grid.len();
    if !(x >= grid[0] && x <= grid[n - 1]) {
        return None;
    }
    let i = match grid.partition_point(|&g| g <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    Some((i, (x - grid[i]) / (grid[i + 1] - grid[i])))
}

fn lerp(a: f64, b: f64, frac: f64) -> f64 {
    a + (b - a) * frac
}

fn check_increasing(field: &str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(field, "must be finite and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive, got {v}")))
    }
}

pub(crate) fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1), got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive_with_breaks;

    fn dp() -> DeliveryPeriod {
        DeliveryPeriod::reference()
    }

    #[test]
    fn eval_s_reference_points() {
        let sam = VolStructure::Samuelson { lambda: 3.5 };
        assert_eq!(eval_s(&sam, 0.3, 0.3).unwrap(), 1.0);
        let del = VolStructure::DeliverySeasonal { a: 1.0, b: 0.4, c: 0.0 };
        assert!((eval_s(&del, 0.0, 0.0).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(eval_s(&VolStructure::REFERENCE_TRADING, 0.1, 0.8).unwrap(), 1.0);
    }

    #[test]
    fn samuelson_mean_over_period_is_d1() {
        let sam = VolStructure::Samuelson { lambda: 1.5 };
        let d = dp();
        let mean = integrate_adaptive_with_breaks(
            |u| eval_s(&sam, d.tau1(), u).unwrap(),
            d.tau1(),
            d.tau2(),
            &[],
            1e-13,
        )
        .unwrap()
            / d.length();
        assert!((mean - 0.9400).abs() < 5e-5, "{mean}");
    }

    #[test]
    fn eval_s_rejects_bad_inputs() {
        let sam = VolStructure::Samuelson { lambda: 3.5 };
        assert!(matches!(eval_s(&sam, 0.9, 0.8), Err(Error::Domain(_))));
        let bad = VolStructure::DeliverySeasonal { a: 0.3, b: 0.4, c: 0.0 };
        assert!(matches!(eval_s(&bad, 0.0, 0.8), Err(Error::InvalidParameter { .. })));
        let bad = VolStructure::Samuelson { lambda: 0.0 };
        assert!(eval_s(&bad, 0.0, 0.8).is_err());
    }

    #[test]
    fn weight_density_examples() {
        let d = dp();
        for u in [0.76, 0.8, 5.0 / 6.0] {
            assert!((weight_density(&WeightFunction::Uniform, &d, u).unwrap() - 12.0).abs() < 1e-12);
            let e0 = WeightFunction::Exponential { rate: 0.0 };
            assert!((weight_density(&e0, &d, u).unwrap() - 12.0).abs() < 1e-12);
        }
        let e = WeightFunction::Exponential { rate: 0.01 };
        let nw = e.normalized(d).unwrap();
        // tau1 itself lies outside (tau1, tau2]; compare the limit from the right
        let ratio = nw.density_unchecked(0.75) / nw.density(5.0 / 6.0).unwrap();
        assert!((ratio - (0.01f64 / 12.0).exp()).abs() < 1e-15);
        assert!(weight_density(&e, &d, 0.75).is_err());
        assert!(weight_density(&e, &d, 0.9).is_err());
    }

    #[test]
    fn custom_weight_requires_cover_and_positivity() {
        let tab = Tabulated::new(vec![0.76, 0.9], vec![1.0, 2.0]).unwrap();
        assert!(WeightFunction::Custom(tab).validate_for(&dp()).is_err());
        let tab = Tabulated::new(vec![0.7, 0.9], vec![1.0, -2.0]).unwrap();
        assert!(WeightFunction::Custom(tab).validate_for(&dp()).is_err());
    }

    #[test]
    fn tabulated_integral_is_exact_for_partial_segments() {
        let tab = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!((tab.integral(0.5, 1.5) - 0.75).abs() < 1e-15);
        assert_eq!(tab.eval(2.5), None);
        assert_eq!(tab.eval(2.0), Some(0.0));
    }

    #[test]
    fn surface_bilinear_interpolation() {
        let s = TabulatedSurface::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        assert!((s.eval(0.5, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!(s.eval(0.5, 1.5).is_err());
        assert!(s.eval(-0.5, 0.5).is_err());
    }

    #[test]
    fn heston_params_invariants() {
        assert!(HestonParams::REFERENCE.validate().is_ok());
        let mut p = HestonParams::REFERENCE;
        p.rho = 1.0;
        assert!(p.validate().is_err());
        p = HestonParams::REFERENCE;
        p.sigma_vv = 0.0;
        assert!(p.validate().is_ok());
        p.kappa = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn option_and_period_invariants() {
        assert!(DeliveryPeriod::new(0.8, 0.8).is_err());
        assert!(DeliveryPeriod::new(0.0, 0.8).is_err());
        assert!(OptionSpec::new(30.0, 0.75, &dp()).is_err());
        assert!(OptionSpec::new(30.0, 0.5, &dp()).is_ok());
        assert!(OptionSpec::new(0.0, 0.5, &dp()).is_err());
    }

    #[test]
    fn trading_seasonal_theta_min() {
        let m = SwapModel::reference(VolStructure::REFERENCE_TRADING).unwrap();
        assert!((m.theta_min() - 0.6 * (-0.7f64).exp()).abs() < 1e-15);
        // one full seasonal cycle attains the analytic minimum on the grid
        assert!((m.theta_min_on_grid(1.0) - m.theta_min()).abs() < 1e-8);
        assert!(m.theta_min_on_grid(0.75) >= m.theta_min());
    }

    #[test]
    fn s_is_continuous_under_h_halving() {
        let surface = TabulatedSurface::new(
            vec![0.0, 0.75],
            vec![0.7, 0.8, 0.9],
            vec![vec![0.5, 0.9, 0.7], vec![0.6, 1.0, 0.8]],
        )
        .unwrap();
        let structures = [
            VolStructure::REFERENCE_TRADING,
            VolStructure::Samuelson { lambda: 5.5 },
            VolStructure::DeliverySeasonal { a: 1.0, b: 0.4, c: 0.3 },
            VolStructure::GeneralSeparable { surface, bound: 2.0 },
        ];
        for vol in &structures {
            for u in [0.76, 0.8, 0.83] {
                let base = eval_s(vol, 0.5, u).unwrap();
                let mut prev = f64::INFINITY;
                let mut h = 1e-2;
                for _ in 0..12 {
                    let diff = (eval_s(vol, 0.5, u + h).unwrap() - base).abs();
                    assert!(diff <= prev + 1e-15, "{} not monotone in h", vol.tag());
                    prev = diff;
                    h /= 2.0;
                }
                assert!(prev < 1e-4, "{}: {prev}", vol.tag());
            }
        }
    }

    #[test]
    fn year_fractions_accept_ratios() {
        assert_eq!(parse_year_fraction("5/6"), Some(5.0 / 6.0));
        assert_eq!(parse_year_fraction(" 0.75 "), Some(0.75));
        assert_eq!(parse_year_fraction("1/0"), None);
        assert_eq!(parse_year_fraction("abc"), None);
        let dp: DeliveryPeriod = serde_json::from_str(r#"{"tau1": "9/12", "tau2": "5/6"}"#).unwrap();
        assert_eq!(dp, DeliveryPeriod::reference());
        let bad = serde_json::from_str::<DeliveryPeriod>(r#"{"tau1": 0.9, "tau2": "5/6"}"#).unwrap_err();
        assert!(bad.to_string().contains("delivery.tau2"));
        assert!(serde_json::from_str::<DeliveryPeriod>(r#"{"tau1": 0.7, "tau2": 0.8, "x": 1}"#).is_err());
    }

    #[test]
    fn partial_heston_section_falls_back_to_reference_values() {
        let p: HestonParams = serde_json::from_str(r#"{"kappa": 2.0}"#).unwrap();
        assert_eq!(p, HestonParams { kappa: 2.0, ..HestonParams::REFERENCE });
        assert!(serde_json::from_str::<HestonParams>(r#"{"kapa": 2.0}"#).is_err());
    }
}
