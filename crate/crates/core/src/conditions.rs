//! Feller and Novikov checks.
//!
//! Both conditions are sufficient, not necessary, so they are reported rather
//! than enforced; callers attach the warnings to their results.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::{DeliveryPeriod, HestonParams, SwapModel, VolStructure};

/// Feller positivity `2 kappa theta_min > sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FellerCheck {
    pub ok: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub theta_min: f64,
}

/// Sufficient Novikov bound for the change to the swap martingale measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NovikovCheck {
    pub ok: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub lhs: f64,
    pub rhs: f64,
    pub rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
}

/// Combined report for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub model_tag: &'static str,
    pub feller_ok: bool,
    pub feller_lhs: f64,
    pub feller_rhs: f64,
    pub theta_min: f64,
    pub novikov_ok: bool,
    #[serde(serialize_with = "finite_or_null")]
    pub novikov_lhs: f64,
    pub novikov_rhs: f64,
    pub novikov_rule: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub novikov_note: Option<&'static str>,
}

impl ConditionReport {
    /// Evaluates both conditions; Feller is checked on `[0, horizon]`.
    pub fn evaluate(model: &SwapModel, horizon: f64) -> Result<Self> {
        let feller = check_feller(model.params(), model.vol(), horizon)?;
        let novikov = check_novikov(model.params(), model.vol(), model.delivery());
        Ok(Self {
            model_tag: model.vol().tag(),
            feller_ok: feller.ok,
            feller_lhs: feller.lhs,
            feller_rhs: feller.rhs,
            theta_min: feller.theta_min,
            novikov_ok: novikov.ok,
            novikov_lhs: novikov.lhs,
            novikov_rhs: novikov.rhs,
            novikov_rule: novikov.rule,
            novikov_note: novikov.note,
        })
    }

    pub fn all_ok(&self) -> bool {
        self.feller_ok && self.novikov_ok
    }

    /// Human-readable warnings for every failed condition.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.feller_ok {
            out.push(format!(
                "Feller condition fails: 2 kappa theta_min = {:.6} <= sigma^2 = {:.6}",
                self.feller_lhs, self.feller_rhs
            ));
        }
        if !self.novikov_ok {
            out.push(format!(
                "Novikov bound fails ({}): {:.6} <= {:.6}",
                self.novikov_rule, self.novikov_lhs, self.novikov_rhs
            ));
        }
        out
    }
}

/// Compares `2 kappa theta_min` with `sigma^2`.
///
/// `theta_min` is `alpha e^{-beta}` for the seasonal level, the constant level otherwise.
pub fn check_feller(p: &HestonParams, vol: &VolStructure, horizon: f64) -> Result<FellerCheck> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let theta_min = match *vol {
        VolStructure::TradingSeasonal { alpha, beta, .. } => alpha * (-beta).exp(),
        _ => p.theta,
    };
    let lhs = 2.0 * p.kappa * theta_min;
    let rhs = p.sigma_vv * p.sigma_vv;
    Ok(FellerCheck {
        ok: lhs > rhs,
        lhs,
        rhs,
        theta_min,
    })
}

/// Per-shape sufficient condition for Novikov's criterion.
pub fn check_novikov(p: &HestonParams, vol: &VolStructure, dp: &DeliveryPeriod) -> NovikovCheck {
    let k2 = p.kappa * p.kappa;
    let s2 = p.sigma_vv * p.sigma_vv;
    let (lhs, rhs, rule, note) = match vol {
        VolStructure::TradingSeasonal { .. } => (
            f64::INFINITY,
            0.0,
            "unconditional",
            Some("market price of delivery risk vanishes identically"),
        ),
        VolStructure::Samuelson { lambda } => {
            let ld = lambda * dp.length();
            (8.0 * k2, s2 * (1.0f64).max(1.0 / (ld * ld)), "8 kappa^2 > sigma^2 max(1, 1/(lambda (tau2 - tau1))^2)", None)
        }
        VolStructure::DeliverySeasonal { a, .. } => (
            k2,
            a * a * s2,
            "kappa^2 > a^2 sigma^2",
            Some("bound uses the seasonal level a (s(u) <= 2a); the same bound is also written with alpha for a"),
        ),
        VolStructure::GeneralSeparable { bound, .. } => (2.0 * k2, s2 * bound * bound, "2 kappa^2 > sigma^2 R^2", None),
    };
    NovikovCheck {
        ok: lhs > rhs,
        lhs,
        rhs,
        rule,
        note,
    }
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}
