//! Characteristic functions of the log-swap under the two exercise measures.
//!
//! For each leg the characteristic function is
//! `exp(psi0(t) + nu psi1(t) + i phi x)`, where `(psi0, psi1)` solve
//!
//! ```text
//! d psi1 / ds = sigma^2 psi1^2 / 2 - (beta(t) - i phi rho sigma S(t)) psi1
//!               - (phi^2 / 2 - i alpha phi) S(t)^2
//! d psi0 / ds = kappa theta(t) psi1
//! ```
//!
//! in the time to exercise `s = T - t`, both starting from zero. The asset leg
//! uses `alpha = 1/2`, `beta = kappa + rho sigma (xi - S)`; the strike leg uses
//! `alpha = -1/2`, `beta = kappa + rho sigma xi`.
//!
//! The system is integrated with classical RK4 on uniform grids. The step
//! count doubles until two successive grids agree within the tolerance, so
//! `psi0` is carried through the same stages as `psi1` and no complex
//! logarithm is ever taken.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::SwapVolDecomposition;
use crate::error::{Error, Result};
use crate::models::SwapModel;

/// Largest admissible `|phi|` unless configured otherwise.
pub const DEFAULT_PHI_MAX: f64 = 400.0;

/// Which exercise probability a characteristic function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    /// Probability under the measure with the swap as numeraire; multiplies `F`.
    Asset,
    /// Probability under the swap martingale measure; multiplies `K`.
    Strike,
}

impl Leg {
    pub const BOTH: [Leg; 2] = [Leg::Asset, Leg::Strike];

    /// Conventional index: 1 for the asset leg, 2 for the strike leg.
    pub fn index(self) -> u8 {
        match self {
            Leg::Asset => 1,
            Leg::Strike => 2,
        }
    }

    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Leg::Asset),
            2 => Ok(Leg::Strike),
            _ => Err(Error::invalid("k", format!("must be 1 or 2, got {k}"))),
        }
    }

    pub fn alpha(self) -> f64 {
        match self {
            Leg::Asset => 0.5,
            Leg::Strike => -0.5,
        }
    }
}

/// Deterministic coefficients at one trading time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub big_s: f64,
    pub xi: f64,
    pub theta: f64,
}

/// Source of the time-dependent coefficients `S(t)`, `xi(t)` and `theta(t)`.
pub trait CoefficientProfile: Sync {
    fn at(&self, t: f64) -> Result<ProfilePoint>;
}

/// Time-independent coefficients; with `S = 1`, `xi = 0` this is plain Heston.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile(pub ProfilePoint);

impl CoefficientProfile for ConstantProfile {
    fn at(&self, _t: f64) -> Result<ProfilePoint> {
        Ok(self.0)
    }
}

/// Coefficients derived from a swap model.
#[derive(Debug, Clone)]
pub struct ModelProfile<'a> {
    model: &'a SwapModel,
    decomposition: SwapVolDecomposition<'a>,
}

impl<'a> ModelProfile<'a> {
    pub fn new(model: &'a SwapModel) -> Result<Self> {
        Ok(Self {
            model,
            decomposition: SwapVolDecomposition::for_model(model)?,
        })
    }
}

impl CoefficientProfile for ModelProfile<'_> {
    fn at(&self, t: f64) -> Result<ProfilePoint> {
        let f = self.decomposition.factors(t)?;
        Ok(ProfilePoint {
            big_s: f.big_s,
            xi: f.xi,
            theta: self.model.theta_at(t),
        })
    }
}

/// Constant parameters of one Riccati system together with its profile.
#[derive(Clone, Copy)]
pub struct RiccatiCoefficients<'a> {
    pub leg: Leg,
    pub kappa: f64,
    pub sigma_vv: f64,
    pub rho: f64,
    pub profile: &'a dyn CoefficientProfile,
}

impl std::fmt::Debug for RiccatiCoefficients<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiccatiCoefficients")
            .field("leg", &self.leg)
            .field("kappa", &self.kappa)
            .field("sigma_vv", &self.sigma_vv)
            .field("rho", &self.rho)
            .finish_non_exhaustive()
    }
}

impl RiccatiCoefficients<'_> {
    pub fn alpha(&self) -> f64 {
        self.leg.alpha()
    }

    /// Mean-reversion coefficient `beta(t)` of the leg.
    pub fn beta(&self, p: &ProfilePoint) -> f64 {
        match self.leg {
            Leg::Asset => self.kappa + self.sigma_vv * self.rho * (p.xi - p.big_s),
            Leg::Strike => self.kappa + self.sigma_vv * self.rho * p.xi,
        }
    }

    /// Right-hand side `(d psi0 / ds, d psi1 / ds)` at one profile point.
    pub fn rhs(&self, p: &ProfilePoint, phi: f64, psi1: Complex64) -> (Complex64, Complex64) {
        let i_phi = Complex64::new(0.0, phi);
        let s2 = p.big_s * p.big_s;
        let linear = Complex64::from(self.beta(p)) - i_phi * (self.rho * self.sigma_vv * p.big_s);
        let source = Complex64::new(0.5 * phi * phi, -self.alpha() * phi) * s2;
        let d1 = 0.5 * self.sigma_vv * self.sigma_vv * psi1 * psi1 - linear * psi1 - source;
        let d0 = self.kappa * p.theta * psi1;
        (d0, d1)
    }
}

/// Controls of the step-doubling integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiccatiConfig {
    /// Step count of the coarsest grid.
    pub initial_steps: usize,
    /// Absolute tolerance per component of the estimated error.
    pub abs_tol: f64,
    /// Refinement stops with an error beyond this many steps.
    pub max_steps: usize,
    pub phi_max: f64,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        Self {
            initial_steps: 16,
            abs_tol: 1e-10,
            max_steps: 1 << 18,
            phi_max: DEFAULT_PHI_MAX,
        }
    }
}

impl RiccatiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_steps == 0 {
            return Err(Error::invalid("riccati.initial_steps", "must be at least 1"));
        }
        if self.max_steps < 2 * self.initial_steps {
            return Err(Error::invalid(
                "riccati.max_steps",
                "must allow at least one refinement of initial_steps",
            ));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("riccati.abs_tol", "must be positive"));
        }
        if !(self.phi_max > 0.0 && self.phi_max.is_finite()) {
            return Err(Error::invalid("riccati.phi_max", "must be positive"));
        }
        Ok(())
    }

    fn max_level(&self) -> usize {
        let mut level = 0;
        while self.initial_steps << (level + 1) <= self.max_steps {
            level += 1;
        }
        level
    }
}

/// Converged `(psi0, psi1)` at the valuation time for one `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharFnSolution {
    pub phi: f64,
    pub leg: Leg,
    pub psi0: Complex64,
    pub psi1: Complex64,
    /// Valuation time.
    pub t: f64,
    /// Exercise time.
    pub maturity: f64,
    /// Steps of the accepted grid.
    pub steps: usize,
    /// Richardson estimate of the error of the accepted values.
    pub error_estimate: f64,
}

/// Evaluates `exp(psi0 + nu psi1 + i phi x)`.
pub fn char_fn(sol: &CharFnSolution, x: f64, nu: f64) -> Complex64 {
    (sol.psi0 + nu * sol.psi1 + Complex64::new(0.0, sol.phi * x)).exp()
}

/// `(psi0, psi1)` along a fixed grid, ordered from the exercise time backwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Trading times `T - j h`.
    pub times: Vec<f64>,
    pub psi0: Vec<Complex64>,
    pub psi1: Vec<Complex64>,
}

/// Profile values at the nodes and midpoints of one uniform grid.
struct CoefficientTable<'a> {
    profile: &'a dyn CoefficientProfile,
    t: f64,
    maturity: f64,
    initial_steps: usize,
    levels: Vec<OnceLock<std::result::Result<Vec<ProfilePoint>, Error>>>,
}

impl<'a> CoefficientTable<'a> {
    fn new(profile: &'a dyn CoefficientProfile, t: f64, maturity: f64, cfg: &RiccatiConfig) -> Self {
        Self {
            profile,
            t,
            maturity,
            initial_steps: cfg.initial_steps,
            levels: (0..=cfg.max_level()).map(|_| OnceLock::new()).collect(),
        }
    }

    fn sample(&self, n: usize) -> Result<Vec<ProfilePoint>> {
        let half = (self.maturity - self.t) / (2 * n) as f64;
        (0..=2 * n)
            .map(|j| {
                let t = if j == 2 * n { self.t } else { self.maturity - j as f64 * half };
                self.profile.at(t)
            })
            .collect()
    }

    fn level(&self, level: usize) -> Result<&[ProfilePoint]> {
        let n = self.initial_steps << level;
        match self.levels[level].get_or_init(|| self.sample(n)) {
            Ok(points) => Ok(points),
            Err(e) => Err(replay(e)),
        }
    }
}

/// Reconstructs a cached profile error for a new caller.
fn replay(e: &Error) -> Error {
    match e {
        Error::QuadratureNotConverged { achieved, requested } => Error::QuadratureNotConverged {
            achieved: *achieved,
            requested: *requested,
        },
        Error::InvalidParameter { field, reason } => Error::invalid(field.clone(), reason.clone()),
        other => Error::domain(other.to_string()),
    }
}

enum Sweep {
    Done(Complex64, Complex64),
    NonFinite { time: f64 },
}

/// Solves the Riccati systems of one model between a valuation and an exercise time.
///
/// The coefficient table is shared across `phi` and legs, so a solver should be
/// built once per pricing call and reused for every quadrature node. `solve`
/// takes `&self` and may be called concurrently.
pub struct CharFnSolver<'a> {
    kappa: f64,
    sigma_vv: f64,
    rho: f64,
    table: CoefficientTable<'a>,
    cfg: RiccatiConfig,
}

impl<'a> CharFnSolver<'a> {
    pub fn new(
        kappa: f64,
        sigma_vv: f64,
        rho: f64,
        profile: &'a dyn CoefficientProfile,
        t: f64,
        maturity: f64,
        cfg: RiccatiConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(t.is_finite() && maturity.is_finite() && t >= 0.0 && t < maturity) {
            return Err(Error::domain(format!(
                "need 0 <= t < T, got t = {t}, T = {maturity}"
            )));
        }
        Ok(Self {
            kappa,
            sigma_vv,
            rho,
            table: CoefficientTable::new(profile, t, maturity, &cfg),
            cfg,
        })
    }

    fn coefficients(&self, leg: Leg) -> RiccatiCoefficients<'a> {
        RiccatiCoefficients {
            leg,
            kappa: self.kappa,
            sigma_vv: self.sigma_vv,
            rho: self.rho,
            profile: self.table.profile,
        }
    }

    fn check_phi(&self, phi: f64) -> Result<()> {
        if !phi.is_finite() || phi.abs() > self.cfg.phi_max {
            return Err(Error::PhiOutOfRange {
                phi,
                max: self.cfg.phi_max,
            });
        }
        Ok(())
    }

    fn sweep(&self, rc: &RiccatiCoefficients, pts: &[ProfilePoint], phi: f64, mut record: impl FnMut(usize, Complex64, Complex64)) -> Sweep {
        let n = (pts.len() - 1) / 2;
        let h = (self.table.maturity - self.table.t) / n as f64;
        let (mut psi0, mut psi1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        record(0, psi0, psi1);
        for i in 0..n {
            let (a, m, b) = (&pts[2 * i], &pts[2 * i + 1], &pts[2 * i + 2]);
            let (k1_0, k1_1) = rc.rhs(a, phi, psi1);
            let (k2_0, k2_1) = rc.rhs(m, phi, psi1 + 0.5 * h * k1_1);
            let (k3_0, k3_1) = rc.rhs(m, phi, psi1 + 0.5 * h * k2_1);
            let (k4_0, k4_1) = rc.rhs(b, phi, psi1 + h * k3_1);
            psi0 += h / 6.0 * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0);
            psi1 += h / 6.0 * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1);
            if !(psi0.is_finite() && psi1.is_finite()) {
                return Sweep::NonFinite {
                    time: self.table.maturity - (i + 1) as f64 * h,
                };
            }
            record(i + 1, psi0, psi1);
        }
        Sweep::Done(psi0, psi1)
    }

    /// Solves one leg at one `phi` with step doubling.
    pub fn solve(&self, leg: Leg, phi: f64) -> Result<CharFnSolution> {
        self.check_phi(phi)?;
        let rc = self.coefficients(leg);
        let solution = |psi0, psi1, steps, error_estimate| CharFnSolution {
            phi,
            leg,
            psi0,
            psi1,
            t: self.table.t,
            maturity: self.table.maturity,
            steps,
            error_estimate,
        };
        if phi == 0.0 {
            return Ok(solution(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0, 0.0));
        }
        let mut previous: Option<(Complex64, Complex64)> = None;
        let mut last_error = f64::INFINITY;
        let mut blow_up = None;
        let max_level = self.table.levels.len() - 1;
        for level in 0..=max_level {
            let steps = self.cfg.initial_steps << level;
            let pts = self.table.level(level)?;
            match self.sweep(&rc, pts, phi, |_, _, _| {}) {
                Sweep::NonFinite { time } => {
                    blow_up = Some(time);
                    previous = None;
                }
                Sweep::Done(psi0, psi1) => {
                    blow_up = None;
                    if let Some((p0, p1)) = previous {
                        let err = ((psi0 - p0).norm()).max((psi1 - p1).norm()) / 15.0;
                        last_error = err;
                        if err <= self.cfg.abs_tol {
                            return Ok(solution(psi0, psi1, steps, err));
                        }
                    }
                    previous = Some((psi0, psi1));
                }
            }
        }
        match blow_up {
            Some(time) => Err(Error::RiccatiBlowUp { time, phi }),
            None => Err(Error::RiccatiNotConverged {
                phi,
                achieved: last_error,
                steps: self.cfg.initial_steps << max_level,
            }),
        }
    }

    /// Integrates on a fixed grid of `steps` RK4 steps and returns the whole trajectory.
    pub fn trajectory(&self, leg: Leg, phi: f64, steps: usize) -> Result<Trajectory> {
        self.check_phi(phi)?;
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        let pts = self.table.sample(steps)?;
        let h = (self.table.maturity - self.table.t) / steps as f64;
        let mut out = Trajectory {
            times: Vec::with_capacity(steps + 1),
            psi0: Vec::with_capacity(steps + 1),
            psi1: Vec::with_capacity(steps + 1),
        };
        let rc = self.coefficients(leg);
        let sweep = self.sweep(&rc, &pts, phi, |j, p0, p1| {
            out.times.push(if j == steps { self.table.t } else { self.table.maturity - j as f64 * h });
            out.psi0.push(p0);
            out.psi1.push(p1);
        });
        match sweep {
            Sweep::Done(..) => Ok(out),
            Sweep::NonFinite { time } => Err(Error::RiccatiBlowUp { time, phi }),
        }
    }

    /// Values at the valuation time on a fixed grid, without error control.
    pub fn solve_fixed(&self, leg: Leg, phi: f64, steps: usize) -> Result<(Complex64, Complex64)> {
        let tr = self.trajectory(leg, phi, steps)?;
        Ok((tr.psi0[steps], tr.psi1[steps]))
    }
}

/// Builds the solver for a swap model between `t` and the exercise time.
pub fn model_solver<'a>(
    profile: &'a ModelProfile<'a>,
    t: f64,
    maturity: f64,
    cfg: RiccatiConfig,
) -> Result<CharFnSolver<'a>> {
    let p = profile.model.params();
    CharFnSolver::new(p.kappa, p.sigma_vv, p.rho, profile, t, maturity, cfg)
}

/// Solves a single Riccati system; prefer [`CharFnSolver`] when many `phi` are needed.
pub fn solve_riccati(
    rc: &RiccatiCoefficients,
    t: f64,
    maturity: f64,
    phi: f64,
    cfg: RiccatiConfig,
) -> Result<CharFnSolution> {
    CharFnSolver::new(rc.kappa, rc.sigma_vv, rc.rho, rc.profile, t, maturity, cfg)?.solve(rc.leg, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HestonParams, VolStructure};

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    /// Classical Heston `(C, D)` in the rotation-count-free form.
    fn heston(leg: Leg, p: &HestonParams, tau: f64, phi: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let b = match leg {
            Leg::Asset => p.kappa - p.rho * p.sigma_vv,
            Leg::Strike => p.kappa,
        };
        let u = leg.alpha();
        let s2 = p.sigma_vv * p.sigma_vv;
        let bm = b - p.rho * p.sigma_vv * phi * i;
        let d = (bm * bm - s2 * (2.0 * u * phi * i - phi * phi)).sqrt();
        let g = (bm - d) / (bm + d);
        let e = (-d * tau).exp();
        let dd = (bm - d) / s2 * (1.0 - e) / (1.0 - g * e);
        let cc = p.kappa * p.theta / s2 * ((bm - d) * tau - 2.0 * ((1.0 - g * e) / (1.0 - g)).ln());
        (cc, dd)
    }

    fn heston_profile(theta: f64) -> ConstantProfile {
        ConstantProfile(ProfilePoint {
            big_s: 1.0,
            xi: 0.0,
            theta,
        })
    }

    #[test]
    fn leg_constants() {
        assert_eq!(Leg::Asset.alpha(), 0.5);
        assert_eq!(Leg::Strike.alpha(), -0.5);
        assert_eq!(Leg::from_index(2).unwrap(), Leg::Strike);
        assert!(Leg::from_index(3).is_err());
    }

    #[test]
    fn zero_phi_is_trivial() {
        let m = SwapModel::reference(VolStructure::REFERENCE_SAMUELSON).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        for leg in Leg::BOTH {
            let sol = s.solve(leg, 0.0).unwrap();
            assert_eq!((sol.psi0, sol.psi1), (C0, C0));
            assert_eq!(char_fn(&sol, 3.4, 0.6), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn matches_heston_closed_form() {
        let p = HestonParams::REFERENCE;
        let prof = heston_profile(p.theta);
        let s = CharFnSolver::new(p.kappa, p.sigma_vv, p.rho, &prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        for leg in Leg::BOTH {
            for phi in [1.0, 5.0, 25.0] {
                let sol = s.solve(leg, phi).unwrap();
                let (c, d) = heston(leg, &p, 0.5, phi);
                assert!((sol.psi0 - c).norm() < 1e-8, "{leg:?} {phi}: {} vs {c}", sol.psi0);
                assert!((sol.psi1 - d).norm() < 1e-8, "{leg:?} {phi}: {} vs {d}", sol.psi1);
            }
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let m = SwapModel::reference(VolStructure::REFERENCE_SAMUELSON).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        for leg in Leg::BOTH {
            let a = s.solve(leg, 3.0).unwrap();
            let b = s.solve(leg, -3.0).unwrap();
            let (qa, qb) = (char_fn(&a, 3.4, 0.6), char_fn(&b, 3.4, 0.6));
            assert!((qb - qa.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn char_fn_substitution_and_bound() {
        let m = SwapModel::reference(VolStructure::REFERENCE_DELIVERY).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        let sol = s.solve(Leg::Strike, 2.0).unwrap();
        assert!((char_fn(&sol, 0.0, 0.0) - sol.psi0.exp()).norm() < 1e-15);
        let bound = (sol.psi0.re + 0.6 * sol.psi1.re).exp();
        assert!(char_fn(&sol, 1.3, 0.6).norm() <= bound * (1.0 + 1e-14));
    }

    #[test]
    fn terminal_values_are_zero() {
        let m = SwapModel::reference(VolStructure::REFERENCE_TRADING).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        let tr = s.trajectory(Leg::Asset, 4.0, 64).unwrap();
        assert_eq!(tr.times[0], 0.5);
        assert_eq!(tr.psi0[0], C0);
        assert_eq!(tr.psi1[0], C0);
        assert_eq!(*tr.times.last().unwrap(), 0.0);
    }

    #[test]
    fn ode_residual_is_small() {
        let m = SwapModel::reference(VolStructure::REFERENCE_SAMUELSON).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        let n = 4096;
        let h = 0.5 / n as f64;
        for leg in Leg::BOTH {
            let rc = s.coefficients(leg);
            let tr = s.trajectory(leg, 1.0, n).unwrap();
            let mut worst: f64 = 0.0;
            for j in 1..n {
                let fd = (tr.psi1[j + 1] - tr.psi1[j - 1]) / (2.0 * h);
                let pt = prof.at(tr.times[j]).unwrap();
                let (_, rhs) = rc.rhs(&pt, 1.0, tr.psi1[j]);
                worst = worst.max((fd - rhs).norm());
            }
            assert!(worst < 1e-6, "{leg:?}: residual {worst}");
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let m = SwapModel::reference(VolStructure::REFERENCE_SAMUELSON).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let s = model_solver(&prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        let (_, a) = s.solve_fixed(Leg::Strike, 5.0, 16).unwrap();
        let (_, b) = s.solve_fixed(Leg::Strike, 5.0, 32).unwrap();
        let (_, c) = s.solve_fixed(Leg::Strike, 5.0, 64).unwrap();
        let rate = ((a - b).norm() / (b - c).norm()).log2();
        assert!(rate >= 3.5, "rate {rate}");
    }

    #[test]
    fn initial_step_count_does_not_matter() {
        let m = SwapModel::reference(VolStructure::REFERENCE_DELIVERY).unwrap();
        let prof = ModelProfile::new(&m).unwrap();
        let coarse = RiccatiConfig { initial_steps: 8, ..Default::default() };
        let fine = RiccatiConfig { initial_steps: 50, ..Default::default() };
        let a = model_solver(&prof, 0.0, 0.5, coarse).unwrap().solve(Leg::Asset, 7.0).unwrap();
        let b = model_solver(&prof, 0.0, 0.5, fine).unwrap().solve(Leg::Asset, 7.0).unwrap();
        assert!((a.psi1 - b.psi1).norm() < 2e-10 + a.error_estimate + b.error_estimate);
        assert!((a.psi0 - b.psi0).norm() < 2e-10 + a.error_estimate + b.error_estimate);
    }

    #[test]
    fn phi_beyond_maximum_is_rejected() {
        let prof = heston_profile(0.6);
        let s = CharFnSolver::new(3.0, 0.4, -0.3, &prof, 0.0, 0.5, RiccatiConfig::default()).unwrap();
        assert!(matches!(s.solve(Leg::Asset, 401.0), Err(Error::PhiOutOfRange { .. })));
        assert!(s.solve(Leg::Asset, 400.0).is_ok());
    }

    #[test]
    fn blow_up_reports_time() {
        // a strongly explosive quadratic term with tiny refinement budget
        let prof = heston_profile(0.6);
        let cfg = RiccatiConfig { initial_steps: 4, max_steps: 16, ..Default::default() };
        let s = CharFnSolver::new(0.0, 400.0, 0.0, &prof, 0.0, 5.0, cfg).unwrap();
        match s.solve(Leg::Asset, 300.0) {
            Err(Error::RiccatiBlowUp { time, .. }) => assert!((0.0..5.0).contains(&time)),
            Err(Error::RiccatiNotConverged { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let s = CharFnSolver::new(3.0, 0.4, -0.3, &prof, 0.0, 0.5, cfg).unwrap();
        assert!(matches!(s.solve(Leg::Asset, 150.0), Err(Error::RiccatiNotConverged { .. })));
    }

    #[test]
    fn rejects_bad_interval() {
        let prof = heston_profile(0.6);
        assert!(CharFnSolver::new(3.0, 0.4, -0.3, &prof, 0.5, 0.5, RiccatiConfig::default()).is_err());
    }
}
