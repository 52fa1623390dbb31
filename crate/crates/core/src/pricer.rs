//! European option prices on a swap.
//!
//! The semi-analytic price is
//! `C = df (F P_asset - K P_strike)` with exercise probabilities
//!
//! ```text
//! P_k = 1/2 + (1/pi) int_0^inf Re[exp(-i phi ln K) Qhat_k(phi) / (i phi)] d phi
//! ```
//!
//! integrated panel by panel with Gauss–Legendre and truncated once the
//! integrand envelope `|Qhat_k| / phi` has been negligible for consecutive
//! panels. Puts follow from parity. The Monte-Carlo price and the Black-76
//! price of the deterministic-variance case serve as independent references.

use std::f64::consts::{FRAC_1_PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::averaging::SwapVolDecomposition;
use crate::charfn::{char_fn, model_solver, CharFnSolver, Leg, ModelProfile, RiccatiConfig};
use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::models::{OptionSpec, SwapModel, VolStructure};
use crate::quadrature::GaussLegendre;
use crate::simulate::{simulate_terminal, GridSpec, Measure};

/// Slack allowed on exercise probabilities before clamping is reported as suspicious.
pub const PROBABILITY_SLACK: f64 = 1e-6;

/// Fourier quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub nodes_per_panel: usize,
    pub panel_width: f64,
    /// Truncate once `max |Qhat| / phi` over a panel stays below this value.
    pub envelope_tol: f64,
    /// Number of consecutive quiet panels required for truncation.
    pub quiet_panels: usize,
    pub riccati: RiccatiConfig,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            nodes_per_panel: 32,
            panel_width: 2.0,
            envelope_tol: 1e-12,
            quiet_panels: 2,
            riccati: RiccatiConfig::default(),
        }
    }
}

impl FourierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_panel == 0 {
            return Err(Error::invalid("fourier.nodes_per_panel", "must be at least 1"));
        }
        if !(self.panel_width > 0.0 && self.panel_width.is_finite()) {
            return Err(Error::invalid("fourier.panel_width", "must be positive"));
        }
        if !(self.envelope_tol > 0.0) {
            return Err(Error::invalid("fourier.envelope_tol", "must be positive"));
        }
        if self.quiet_panels == 0 {
            return Err(Error::invalid("fourier.quiet_panels", "must be at least 1"));
        }
        self.riccati.validate()
    }
}

/// State at the valuation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationState {
    pub t: f64,
    /// Log swap price.
    pub x: f64,
    pub nu: f64,
}

impl ValuationState {
    /// Initial state of a model: `t = 0`, `x = ln F0`, `nu = nu0`.
    pub fn initial(model: &SwapModel) -> Self {
        let p = model.params();
        Self {
            t: 0.0,
            x: p.f0.ln(),
            nu: p.nu0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fourier,
    Mc,
    Black76,
}

/// Method-specific details attached to a price.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_truncation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_riccati_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub put_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub strike: f64,
    pub exercise: f64,
    pub call: f64,
    pub put: f64,
    /// Exercise probability under the measure with the swap as numeraire.
    pub q1: f64,
    /// Exercise probability under the swap martingale measure.
    pub q2: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

/// Raw Fourier integrals `1 - Q_k` for several strikes sharing one set of solves.
#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseProbabilities {
    /// `[asset, strike]` probability per requested strike, unclamped.
    pub values: Vec<[f64; 2]>,
    pub panels: usize,
    pub phi_truncation: f64,
    pub max_riccati_steps: usize,
}

/// Computes `1 - Q_k` for both legs and every strike.
pub fn exercise_probabilities(
    solver: &CharFnSolver,
    x: f64,
    nu: f64,
    strikes: &[f64],
    cfg: &FourierConfig,
) -> Result<ExerciseProbabilities> {
    cfg.validate()?;
    if nu < 0.0 || !nu.is_finite() || !x.is_finite() {
        return Err(Error::domain(format!("need finite x and nu >= 0, got x = {x}, nu = {nu}")));
    }
    for &k in strikes {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid("option.strike", format!("must be positive, got {k}")));
        }
    }
    let log_k: Vec<f64> = strikes.iter().map(|k| k.ln()).collect();
    let gl = GaussLegendre::new(cfg.nodes_per_panel);
    let phi_max = cfg.riccati.phi_max;
    let mut sums = vec![[0.0; 2]; strikes.len()];
    let mut quiet = 0;
    let mut panels = 0;
    let mut max_steps = 0;
    let mut envelope = f64::INFINITY;
    loop {
        let a = panels as f64 * cfg.panel_width;
        let b = a + cfg.panel_width;
        if b > phi_max * (1.0 + 1e-12) {
            return Err(Error::TruncationNotReached {
                partial: sums.first().map_or(0.5, |s| 0.5 + FRAC_1_PI * s[1]),
                bound: envelope,
                phi_max,
            });
        }
        let nodes: Vec<(f64, f64)> = gl.mapped(a, b).collect();
        let evals: Vec<(f64, [Complex64; 2], usize)> = nodes
            .par_iter()
            .map(|&(phi, w)| {
                let mut q = [Complex64::new(0.0, 0.0); 2];
                let mut steps = 0;
                for leg in Leg::BOTH {
                    let sol = solver.solve(leg, phi)?;
                    steps = steps.max(sol.steps);
                    q[leg.index() as usize - 1] = char_fn(&sol, x, nu);
                }
                Ok((w, q, steps))
            })
            .collect::<Result<_>>()?;
        envelope = 0.0;
        for (&(phi, _), &(w, q, steps)) in nodes.iter().zip(&evals) {
            max_steps = max_steps.max(steps);
            envelope = envelope.max(q[0].norm() / phi).max(q[1].norm() / phi);
            let over_i_phi = Complex64::new(0.0, -1.0 / phi);
            for (sum, &lk) in sums.iter_mut().zip(&log_k) {
                let rot = Complex64::from_polar(1.0, -phi * lk) * over_i_phi;
                sum[0] += w * (rot * q[0]).re;
                sum[1] += w * (rot * q[1]).re;
            }
        }
        panels += 1;
        quiet = if envelope < cfg.envelope_tol { quiet + 1 } else { 0 };
        if quiet >= cfg.quiet_panels {
            return Ok(ExerciseProbabilities {
                values: sums
                    .iter()
                    .map(|s| [0.5 + FRAC_1_PI * s[0], 0.5 + FRAC_1_PI * s[1]])
                    .collect(),
                panels,
                phi_truncation: b,
                max_riccati_steps: max_steps,
            });
        }
    }
}

/// `1 - Q_k` for one leg of one model.
pub fn exercise_prob(
    leg: Leg,
    model: &SwapModel,
    state: ValuationState,
    strike: f64,
    exercise: f64,
    cfg: &FourierConfig,
) -> Result<f64> {
    let profile = ModelProfile::new(model)?;
    let solver = model_solver(&profile, state.t, exercise, cfg.riccati)?;
    let probs = exercise_probabilities(&solver, state.x, state.nu, &[strike], cfg)?;
    Ok(probs.values[0][leg.index() as usize - 1])
}

fn clamp_probability(name: &str, value: f64, warnings: &mut Vec<String>) -> f64 {
    if (0.0..=1.0).contains(&value) {
        return value;
    }
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
        warnings.push(format!("{name} = {value:e} lies outside [0, 1] beyond the numerical slack; clamped"));
    } else {
        warnings.push(format!("{name} = {value:e} clamped to [0, 1]"));
    }
    value.clamp(0.0, 1.0)
}

fn check_state(model: &SwapModel, state: &ValuationState, exercise: f64) -> Result<()> {
    if !(state.t >= 0.0 && state.t < exercise) {
        return Err(Error::domain(format!(
            "valuation time {} must lie in [0, exercise = {exercise})",
            state.t
        )));
    }
    if exercise >= model.delivery().tau1() {
        return Err(Error::invalid("option.exercise", "must precede the start of delivery"));
    }
    Ok(())
}

/// Semi-analytic prices for several strikes with a common exercise time.
pub fn price_fourier_strikes(
    model: &SwapModel,
    strikes: &[f64],
    exercise: f64,
    state: ValuationState,
    cfg: &FourierConfig,
) -> Result<Vec<PriceResult>> {
    check_state(model, &state, exercise)?;
    let conditions = ConditionReport::evaluate(model, exercise)?;
    let profile = ModelProfile::new(model)?;
    let solver = model_solver(&profile, state.t, exercise, cfg.riccati)?;
    let probs = exercise_probabilities(&solver, state.x, state.nu, strikes, cfg)?;
    let df = (-model.params().r * (exercise - state.t)).exp();
    let f = state.x.exp();
    Ok(strikes
        .iter()
        .zip(&probs.values)
        .map(|(&k, &[raw1, raw2])| {
            let mut warnings = conditions.warnings();
            let q1 = clamp_probability("q1", raw1, &mut warnings);
            let q2 = clamp_probability("q2", raw2, &mut warnings);
            let call = (df * (f * q1 - k * q2)).max(0.0);
            let put = (call - df * (f - k)).max(0.0);
            PriceResult {
                strike: k,
                exercise,
                call,
                put,
                q1,
                q2,
                method: Method::Fourier,
                stderr: None,
                diagnostics: Diagnostics {
                    panels: Some(probs.panels),
                    phi_truncation: Some(probs.phi_truncation),
                    max_riccati_steps: Some(probs.max_riccati_steps),
                    ..Default::default()
                },
                warnings,
            }
        })
        .collect())
}

/// Semi-analytic price of one option.
pub fn price_fourier(
    model: &SwapModel,
    opt: &OptionSpec,
    state: ValuationState,
    cfg: &FourierConfig,
) -> Result<PriceResult> {
    opt.validate(model.delivery())?;
    let mut out = price_fourier_strikes(model, &[opt.strike], opt.exercise, state, cfg)?;
    Ok(out.remove(0))
}

/// Monte-Carlo price from the terminal swap values of `grid`.
///
/// Under [`Measure::QTilde`] this is the arbitrage price. Under [`Measure::Q`]
/// the swap is not a martingale unless the delivery-risk premium vanishes, so
/// that mode is only meaningful for comparisons.
pub fn price_mc(model: &SwapModel, opt: &OptionSpec, grid: &GridSpec, measure: Measure) -> Result<PriceResult> {
    opt.validate(model.delivery())?;
    let mut out = price_mc_strikes(model, &[opt.strike], opt.exercise, grid, measure)?;
    Ok(out.remove(0))
}

/// Monte-Carlo prices for several strikes on one set of paths.
pub fn price_mc_strikes(
    model: &SwapModel,
    strikes: &[f64],
    exercise: f64,
    grid: &GridSpec,
    measure: Measure,
) -> Result<Vec<PriceResult>> {
    for &k in strikes {
        OptionSpec { strike: k, exercise }.validate(model.delivery())?;
    }
    if (grid.t_end - exercise).abs() > 1e-12 {
        return Err(Error::invalid(
            "grid.t_end",
            format!("must equal the exercise time {exercise}, got {}", grid.t_end),
        ));
    }
    let terminal = simulate_terminal(model, grid, measure)?;
    let df = (-model.params().r * (grid.t_end - grid.t0)).exp();
    let swaps: Vec<f64> = terminal.x.iter().map(|x| x.exp()).collect();
    let n = swaps.len() as f64;
    let sum_f: f64 = swaps.iter().sum();
    let stderr = |s: f64, s2: f64| {
        let mean = s / n;
        if n > 1.0 {
            (((s2 - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()
        } else {
            0.0
        }
    };
    Ok(strikes
        .iter()
        .map(|&k| {
            let (mut sc, mut sc2, mut sp, mut sp2, mut sf_itm, mut n_itm) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for &f in &swaps {
                let c = (f - k).max(0.0);
                let p = (k - f).max(0.0);
                sc += c;
                sc2 += c * c;
                sp += p;
                sp2 += p * p;
                if f > k {
                    n_itm += 1.0;
                    sf_itm += f;
                }
            }
            PriceResult {
                strike: k,
                exercise,
                call: df * sc / n,
                put: df * sp / n,
                q1: if sum_f > 0.0 { sf_itm / sum_f } else { 0.0 },
                q2: n_itm / n,
                method: Method::Mc,
                stderr: Some(df * stderr(sc, sc2)),
                diagnostics: Diagnostics {
                    paths: Some(grid.n_paths),
                    steps: Some(grid.n_steps),
                    put_stderr: Some(df * stderr(sp, sp2)),
                    ..Default::default()
                },
                warnings: terminal.warnings.clone(),
            }
        })
        .collect())
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Lognormal call and put with total variance `total_var` and discount factor `df`.
pub fn black76_oracle(f: f64, k: f64, total_var: f64, df: f64) -> Result<(f64, f64)> {
    if !(f > 0.0 && k > 0.0 && f.is_finite() && k.is_finite()) {
        return Err(Error::domain(format!("forward and strike must be positive, got {f}, {k}")));
    }
    if !(total_var >= 0.0 && total_var.is_finite()) {
        return Err(Error::domain(format!("total variance must be non-negative, got {total_var}")));
    }
    if !(df > 0.0 && df <= 1.0) {
        return Err(Error::domain(format!("discount factor must lie in (0, 1], got {df}")));
    }
    if total_var == 0.0 {
        return Ok((df * (f - k).max(0.0), df * (k - f).max(0.0)));
    }
    let sd = total_var.sqrt();
    let d_plus = ((f / k).ln() + 0.5 * total_var) / sd;
    let d_minus = d_plus - sd;
    let call = df * (f * std_normal_cdf(d_plus) - k * std_normal_cdf(d_minus));
    let put = df * (k * std_normal_cdf(-d_minus) - f * std_normal_cdf(-d_plus));
    Ok((call, put))
}

/// `int_t^T S(u)^2 nu(u) du` for a model whose variance is deterministic.
///
/// Requires `sigma_vv = 0` and a constant mean-reversion level; the variance then
/// follows `nu(u) = theta + (nu - theta) exp(-kappa (u - t))`.
pub fn deterministic_total_variance(model: &SwapModel, state: ValuationState, exercise: f64) -> Result<f64> {
    let p = model.params();
    if p.sigma_vv != 0.0 {
        return Err(Error::invalid("heston.sigma_vv", "must be zero for a deterministic variance"));
    }
    if matches!(model.vol(), VolStructure::TradingSeasonal { .. }) {
        return Err(Error::invalid("model", "needs a constant mean-reversion level"));
    }
    check_state(model, &state, exercise)?;
    let decomposition = SwapVolDecomposition::for_model(model)?;
    let gl = GaussLegendre::new(32);
    let panels = 64;
    let width = (exercise - state.t) / panels as f64;
    let mut total = 0.0;
    for j in 0..panels {
        let a = state.t + j as f64 * width;
        for (u, w) in gl.mapped(a, a + width) {
            let s = decomposition.big_s(u)?;
            let nu = p.theta + (state.nu - p.theta) * (-p.kappa * (u - state.t)).exp();
            total += w * s * s * nu;
        }
    }
    Ok(total)
}

/// Black-76 price of the deterministic-variance special case.
pub fn price_black76(model: &SwapModel, opt: &OptionSpec, state: ValuationState) -> Result<PriceResult> {
    opt.validate(model.delivery())?;
    let total_var = deterministic_total_variance(model, state, opt.exercise)?;
    let df = (-model.params().r * (opt.exercise - state.t)).exp();
    let f = state.x.exp();
    let (call, put) = black76_oracle(f, opt.strike, total_var, df)?;
    let (q1, q2) = if total_var == 0.0 {
        let itm = if f > opt.strike { 1.0 } else { 0.0 };
        (itm, itm)
    } else {
        let sd = total_var.sqrt();
        let d_plus = ((f / opt.strike).ln() + 0.5 * total_var) / sd;
        (std_normal_cdf(d_plus), std_normal_cdf(d_plus - sd))
    };
    Ok(PriceResult {
        strike: opt.strike,
        exercise: opt.exercise,
        call,
        put,
        q1,
        q2,
        method: Method::Black76,
        stderr: None,
        diagnostics: Diagnostics {
            total_variance: Some(total_var),
            ..Default::default()
        },
        warnings: Vec::new(),
    })
}
