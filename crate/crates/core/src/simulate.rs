//! Monte-Carlo engine for the joint (log-swap, variance) system.
//!
//! The log-swap is stepped by Euler–Maruyama,
//! `X += drift(t) nu dt + S(t) sqrt(nu) dW^F`, and the variance by a
//! drift-implicit Milstein step
//!
//! ```text
//! nu' = (nu + kappa theta(t) dt + sigma sqrt(nu) dW + sigma^2 (dW^2 - dt) / 4)
//!       / (1 + kappa_eff(t + dt) dt)
//! ```
//!
//! with `dW = rho dW^F + sqrt(1 - rho^2) dW^perp`. Under the swap measure
//! `drift = -S^2 / 2` and `kappa_eff = kappa + rho sigma xi(t)`; under the
//! futures measure `drift = -E[s^2] / 2` and `kappa_eff = kappa`.
//!
//! Every path draws from its own ChaCha stream selected by the path index, so
//! results do not depend on the number of worker threads, and two models
//! simulated with the same seed share their Brownian increments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::SwapVolDecomposition;
use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::models::SwapModel;

/// Paths per block when accumulating statistics; blocks are summed in index order.
const STAT_BLOCK: usize = 1024;

/// Pricing measure for the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Futures pricing measure; the swap carries a drift.
    Q,
    /// Swap martingale measure.
    #[default]
    QTilde,
}

/// Time grid, path count and seed of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub n_paths: usize,
}

impl GridSpec {
    pub fn new(t0: f64, t_end: f64, n_steps: usize, seed: u64, n_paths: usize) -> Result<Self> {
        let g = Self {
            t0,
            t_end,
            n_steps,
            seed,
            n_paths,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t_end.is_finite() && self.t0 >= 0.0 && self.t0 < self.t_end) {
            return Err(Error::invalid(
                "grid.t_end",
                format!("need 0 <= t0 < t_end, got t0 = {}, t_end = {}", self.t0, self.t_end),
            ));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("grid.n_steps", "must be at least 1"));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("grid.n_paths", "must be at least 1"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_end
        } else {
            self.t0 + j as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.time(j)).collect()
    }
}

/// Full trajectories of `X = log F` and `nu`, stored row-major by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    times: Vec<f64>,
    x: Vec<f64>,
    nu: Vec<f64>,
    n_paths: usize,
    pub seed: u64,
    pub measure: Measure,
    pub warnings: Vec<String>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// All log-swap values, path after path.
    pub fn log_swaps(&self) -> &[f64] {
        &self.x
    }

    /// All variance values, path after path.
    pub fn variances(&self) -> &[f64] {
        &self.nu
    }

    pub fn x_path(&self, path: usize) -> &[f64] {
        let w = self.times.len();
        &self.x[path * w..(path + 1) * w]
    }

    pub fn nu_path(&self, path: usize) -> &[f64] {
        let w = self.times.len();
        &self.nu[path * w..(path + 1) * w]
    }

    /// Per-time mean and standard error of `F = exp(X)` and mean of `nu`.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let w = self.times.len();
        let mut acc = vec![Moments::default(); w];
        for p in 0..self.n_paths {
            for (j, a) in acc.iter_mut().enumerate() {
                a.push(self.x[p * w + j].exp(), self.nu[p * w + j]);
            }
        }
        summary_rows(&self.times, &acc, self.n_paths)
    }
}

/// One line of the per-time summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: f64,
    pub mean_f: f64,
    pub stderr_f: f64,
    pub mean_nu: f64,
}

/// Terminal values only, for pricing and martingale checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSet {
    pub t_end: f64,
    pub x: Vec<f64>,
    pub nu: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum_f: f64,
    sum_f2: f64,
    sum_nu: f64,
}

impl Moments {
    fn push(&mut self, f: f64, nu: f64) {
        self.sum_f += f;
        self.sum_f2 += f * f;
        self.sum_nu += nu;
    }

    fn merge(&mut self, o: &Moments) {
        self.sum_f += o.sum_f;
        self.sum_f2 += o.sum_f2;
        self.sum_nu += o.sum_nu;
    }
}

fn summary_rows(times: &[f64], acc: &[Moments], n: usize) -> Vec<SummaryRow> {
    let nf = n as f64;
    times
        .iter()
        .zip(acc)
        .map(|(&t, a)| {
            let mean = a.sum_f / nf;
            let var = if n > 1 {
                ((a.sum_f2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            SummaryRow {
                t,
                mean_f: mean,
                stderr_f: (var / nf).sqrt(),
                mean_nu: a.sum_nu / nf,
            }
        })
        .collect()
}

/// Per-grid-point coefficients shared by all paths.
#[derive(Debug, Clone, Copy)]
struct NodeCoefficients {
    /// Drift of `X` per unit variance.
    drift_x: f64,
    big_s: f64,
    kappa_theta: f64,
    /// `1 + kappa_eff dt`.
    denom: f64,
}

/// Precomputed stepping context for one model, grid and measure.
struct Stepper {
    nodes: Vec<NodeCoefficients>,
    times: Vec<f64>,
    dt: f64,
    sqrt_dt: f64,
    rho: f64,
    rho_bar: f64,
    sigma: f64,
    x0: f64,
    nu0: f64,
    seed: u64,
}

impl Stepper {
    fn new(model: &SwapModel, grid: &GridSpec, measure: Measure) -> Result<Self> {
        grid.validate()?;
        let tau1 = model.delivery().tau1();
        if grid.t_end > tau1 {
            return Err(Error::invalid(
                "grid.t_end",
                format!("must not exceed tau1 = {tau1}, got {}", grid.t_end),
            ));
        }
        let p = model.params();
        let decomposition = SwapVolDecomposition::for_model(model)?;
        let dt = grid.dt();
        let times = grid.times();
        let mut nodes = Vec::with_capacity(times.len());
        for &t in &times {
            let f = decomposition.factors(t)?;
            let (drift_x, kappa_eff) = match measure {
                Measure::QTilde => (-0.5 * f.big_s * f.big_s, p.kappa + p.rho * p.sigma_vv * f.xi),
                Measure::Q => (-0.5 * f.big_s * f.big_s - f.big_s * f.xi, p.kappa),
            };
            let denom = 1.0 + kappa_eff * dt;
            if !(denom > 0.0) {
                return Err(Error::ImplicitDenominator { time: t, value: denom });
            }
            nodes.push(NodeCoefficients {
                drift_x,
                big_s: f.big_s,
                kappa_theta: p.kappa * model.theta_at(t),
                denom,
            });
        }
        Ok(Self {
            nodes,
            times,
            dt,
            sqrt_dt: dt.sqrt(),
            rho: p.rho,
            rho_bar: (1.0 - p.rho * p.rho).sqrt(),
            sigma: p.sigma_vv,
            x0: p.f0.ln(),
            nu0: p.nu0,
            seed: grid.seed,
        })
    }

    fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Runs one path, handing `(step, x, nu)` to `sink` for every grid point.
    fn run(&self, path: usize, mut sink: impl FnMut(usize, f64, f64)) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        let (mut x, mut nu) = (self.x0, self.nu0);
        sink(0, x, nu);
        let quarter_s2 = 0.25 * self.sigma * self.sigma;
        for j in 0..self.n_steps() {
            let z_f: f64 = StandardNormal.sample(&mut rng);
            let z_perp: f64 = StandardNormal.sample(&mut rng);
            let dw_f = self.sqrt_dt * z_f;
            let dw_v = self.rho * dw_f + self.rho_bar * self.sqrt_dt * z_perp;
            let c = &self.nodes[j];
            let sq = nu.sqrt();
            x += c.drift_x * nu * self.dt + c.big_s * sq * dw_f;
            let numer = nu
                + c.kappa_theta * self.dt
                + self.sigma * sq * dw_v
                + quarter_s2 * (dw_v * dw_v - self.dt);
            nu = numer / self.nodes[j + 1].denom;
            let t = self.times[j + 1];
            if !(x.is_finite() && nu.is_finite()) {
                return Err(Error::NonFiniteState { path, step: j + 1, time: t });
            }
            if nu < 0.0 {
                return Err(Error::NegativeVariance {
                    path,
                    step: j + 1,
                    time: t,
                    value: nu,
                });
            }
            sink(j + 1, x, nu);
        }
        Ok(())
    }
}

fn condition_warnings(model: &SwapModel) -> Result<Vec<String>> {
    Ok(ConditionReport::evaluate(model, model.delivery().tau1())?.warnings())
}

/// Simulates full `(X, nu)` trajectories on the grid.
pub fn simulate_paths(model: &SwapModel, grid: &GridSpec, measure: Measure) -> Result<PathSet> {
    let stepper = Stepper::new(model, grid, measure)?;
    let w = stepper.n_steps() + 1;
    let mut x = vec![0.0; grid.n_paths * w];
    let mut nu = vec![0.0; grid.n_paths * w];
    x.par_chunks_mut(w)
        .zip(nu.par_chunks_mut(w))
        .enumerate()
        .try_for_each(|(path, (xs, nus))| {
            stepper.run(path, |j, xv, nv| {
                xs[j] = xv;
                nus[j] = nv;
            })
        })?;
    Ok(PathSet {
        times: stepper.times.clone(),
        x,
        nu,
        n_paths: grid.n_paths,
        seed: grid.seed,
        measure,
        warnings: condition_warnings(model)?,
    })
}

/// Simulates the grid but keeps only the terminal state of each path.
pub fn simulate_terminal(model: &SwapModel, grid: &GridSpec, measure: Measure) -> Result<TerminalSet> {
    let stepper = Stepper::new(model, grid, measure)?;
    let last = stepper.n_steps();
    let states: Vec<(f64, f64)> = (0..grid.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut end = (f64::NAN, f64::NAN);
            stepper.run(path, |j, xv, nv| {
                if j == last {
                    end = (xv, nv);
                }
            })?;
            Ok(end)
        })
        .collect::<Result<_>>()?;
    let (x, nu) = states.into_iter().unzip();
    Ok(TerminalSet {
        t_end: grid.t_end,
        x,
        nu,
        warnings: condition_warnings(model)?,
    })
}

/// Per-time summary without storing the paths.
pub fn simulate_summary(model: &SwapModel, grid: &GridSpec, measure: Measure) -> Result<Vec<SummaryRow>> {
    let stepper = Stepper::new(model, grid, measure)?;
    let w = stepper.n_steps() + 1;
    let n_blocks = grid.n_paths.div_ceil(STAT_BLOCK);
    let blocks: Vec<Vec<Moments>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![Moments::default(); w];
            let end = ((b + 1) * STAT_BLOCK).min(grid.n_paths);
            for path in b * STAT_BLOCK..end {
                stepper.run(path, |j, xv, nv| acc[j].push(xv.exp(), nv))?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::default(); w];
    for block in &blocks {
        for (t, b) in total.iter_mut().zip(block) {
            t.merge(b);
        }
    }
    Ok(summary_rows(&stepper.times, &total, grid.n_paths))
}
