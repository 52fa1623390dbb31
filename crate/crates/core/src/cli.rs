//! Command-line front end.
//!
//! Every subcommand reads a [`RunConfig`], applies flag overrides and emits a
//! CSV table (full `f64` precision, fixed header) or a JSON document. Errors
//! are written to stderr as a JSON object; the exit status is 1 for invalid
//! input and 2 for numerical failures or failed checks.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::averaging::{d1_d2, samuelson_variance, SwapVolDecomposition};
use crate::charfn::{model_solver, Leg, ModelProfile};
use crate::conditions::ConditionReport;
use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::models::{DeliveryPeriod, SwapModel, VolStructure};
use crate::pricer::{
    price_black76, price_fourier_strikes, price_mc_strikes, PriceResult, ValuationState,
};
use crate::simulate::{simulate_paths, simulate_summary, Measure};

/// Environment variable consulted when `--workers` is absent.
pub const WORKERS_ENV: &str = "ELSWAP_WORKERS";

/// Reference Samuelson factors for a one-month delivery period: `(lambda, d1, variance, d2)`.
pub const TABLE3_EXPECTED: [(f64, f64, f64, f64); 3] = [
    (1.5, 0.9400, 0.0012, 0.0006),
    (3.5, 0.8674, 0.0053, 0.0031),
    (5.5, 0.8022, 0.0112, 0.0070),
];

#[derive(Debug, Parser)]
#[command(name = "elswap", version, about = "Electricity swap options under stochastic volatility")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; omitted sections use the reference parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte-Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Number of time steps (simulation grid, or sample points for `decompose`).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Worker threads for path and Fourier-node parallelism.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feller and Novikov conditions of the configured model.
    Check,
    /// Swap volatility factor S(t) and market price factor xi(t) on [0, tau1].
    Decompose,
    /// Monte-Carlo simulation of the swap and its variance.
    Simulate(SimulateArgs),
    /// Option price for the configured option.
    Price(PriceArgs),
    /// Fourier against Monte-Carlo cross-check for the reference volatility shapes.
    Validate(ValidateArgs),
    /// Samuelson factors of a one-month delivery period against the reference table.
    Table3,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Pricing measure of the simulation.
    #[arg(long, default_value = "q-tilde", value_parser = parse_measure)]
    pub measure: Measure,
    /// Emit every path point (path, t, x, nu) instead of the per-time summary.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PriceMethod {
    Fourier,
    Mc,
    Black76,
    All,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum, default_value = "fourier")]
    pub method: PriceMethod,
    /// Additional strikes priced with the same exercise time.
    #[arg(long, value_delimiter = ',')]
    pub strikes: Vec<f64>,
    /// Write (leg, phi, Re psi0, Im psi0, Re psi1, Im psi1) on a uniform phi grid to this CSV file.
    #[arg(long)]
    pub dump_charfn: Option<PathBuf>,
    /// Spacing of the dumped phi grid.
    #[arg(long, default_value_t = 0.5)]
    pub dump_step: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Strikes as multiples of the initial swap price.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 1.0, 1.2])]
    pub moneyness: Vec<f64>,
    /// Allowed distance in Monte-Carlo standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,
}

fn parse_measure(s: &str) -> std::result::Result<Measure, String> {
    match s {
        "q" => Ok(Measure::Q),
        "q-tilde" | "q_tilde" => Ok(Measure::QTilde),
        other => Err(format!("unknown measure `{other}`, expected q or q-tilde")),
    }
}

/// One tabular cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Output of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// JSON rendering; the table as an array of objects when absent.
    pub json: Option<Value>,
    /// True when a check embedded in the report failed.
    pub failed: bool,
    pub warnings: Vec<String>,
}

impl Report {
    fn table(header: Vec<&'static str>, rows: Vec<Vec<Cell>>) -> Self {
        Self {
            header,
            rows,
            json: None,
            failed: false,
            warnings: Vec::new(),
        }
    }

    fn table_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Renders the report in the requested format.
    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => {
                let value = self.json.clone().unwrap_or_else(|| self.table_json());
                Ok(serde_json::to_string_pretty(&value)? + "\n")
            }
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is valid UTF-8"))
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

/// Loads the configuration and applies flag overrides.
pub fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.grid.seed = seed;
    }
    if let Some(paths) = g.paths {
        cfg.grid.n_paths = paths;
    }
    if let Some(steps) = g.steps {
        cfg.grid.n_steps = Some(steps);
    }
    if let Some(format) = &g.format {
        cfg.output.format = format.parse()?;
    }
    if let Some(out) = &g.out {
        cfg.output.path = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check(cfg: &RunConfig) -> Result<Report> {
    let model = cfg.swap_model()?;
    let report = ConditionReport::evaluate(&model, model.delivery().tau1())?;
    let row = vec![
        Cell::Text(report.model_tag.into()),
        Cell::Bool(report.feller_ok),
        Cell::Num(report.feller_lhs),
        Cell::Num(report.feller_rhs),
        Cell::Num(report.theta_min),
        Cell::Bool(report.novikov_ok),
        Cell::Num(report.novikov_lhs),
        Cell::Num(report.novikov_rhs),
        Cell::Text(report.novikov_rule.into()),
    ];
    let mut out = Report::table(
        vec![
            "model", "feller_ok", "feller_lhs", "feller_rhs", "theta_min", "novikov_ok", "novikov_lhs",
            "novikov_rhs", "novikov_rule",
        ],
        vec![row],
    );
    out.json = Some(to_json(&report)?);
    Ok(out)
}

fn decompose(cfg: &RunConfig, points: Option<usize>) -> Result<Report> {
    let model = cfg.swap_model()?;
    let d = SwapVolDecomposition::for_model(&model)?;
    let tau1 = model.delivery().tau1();
    let n = points.unwrap_or(100).max(1);
    let rows = (0..=n)
        .map(|j| {
            let t = if j == n { tau1 } else { tau1 * j as f64 / n as f64 };
            let f = d.factors(t)?;
            Ok(vec![Cell::Num(t), Cell::Num(f.big_s), Cell::Num(f.xi)])
        })
        .collect::<Result<_>>()?;
    Ok(Report::table(vec!["t", "big_s", "xi"], rows))
}

fn simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<Report> {
    let model = cfg.swap_model()?;
    let grid = cfg.grid_spec()?;
    let warnings = ConditionReport::evaluate(&model, model.delivery().tau1())?.warnings();
    let mut report = if args.full {
        let set = simulate_paths(&model, &grid, args.measure)?;
        let mut rows = Vec::with_capacity(set.n_paths() * set.times().len());
        for p in 0..set.n_paths() {
            for ((&t, &x), &nu) in set.times().iter().zip(set.x_path(p)).zip(set.nu_path(p)) {
                rows.push(vec![Cell::Int(p as u64), Cell::Num(t), Cell::Num(x), Cell::Num(nu)]);
            }
        }
        Report::table(vec!["path", "t", "x", "nu"], rows)
    } else {
        let rows = simulate_summary(&model, &grid, args.measure)?
            .into_iter()
            .map(|r| vec![Cell::Num(r.t), Cell::Num(r.mean_f), Cell::Num(r.stderr_f), Cell::Num(r.mean_nu)])
            .collect();
        Report::table(vec!["t", "mean_f", "stderr_f", "mean_nu"], rows)
    };
    report.warnings = warnings;
    Ok(report)
}

fn price_row(r: &PriceResult) -> Vec<Cell> {
    let method = match r.method {
        crate::pricer::Method::Fourier => "fourier",
        crate::pricer::Method::Mc => "mc",
        crate::pricer::Method::Black76 => "black76",
    };
    vec![
        Cell::Text(method.into()),
        Cell::Num(r.strike),
        Cell::Num(r.exercise),
        Cell::Num(r.call),
        Cell::Num(r.put),
        Cell::Num(r.q1),
        Cell::Num(r.q2),
        Cell::Num(r.stderr.unwrap_or(f64::NAN)),
    ]
}

fn dump_charfn(model: &SwapModel, exercise: f64, phi_end: f64, step: f64, cfg: &RunConfig, path: &PathBuf) -> Result<()> {
    if !(step > 0.0) {
        return Err(Error::invalid("dump_step", "must be positive"));
    }
    let profile = ModelProfile::new(model)?;
    let solver = model_solver(&profile, 0.0, exercise, cfg.fourier.riccati)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["leg", "phi", "re_psi0", "im_psi0", "re_psi1", "im_psi1"])?;
    let n = (phi_end / step).ceil() as usize;
    for leg in Leg::BOTH {
        for j in 0..=n {
            let phi = j as f64 * step;
            let sol = solver.solve(leg, phi)?;
            w.write_record([
                leg.index().to_string(),
                format_float(phi),
                format_float(sol.psi0.re),
                format_float(sol.psi0.im),
                format_float(sol.psi1.re),
                format_float(sol.psi1.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn price(cfg: &RunConfig, args: &PriceArgs) -> Result<Report> {
    let model = cfg.swap_model()?;
    let opt = cfg.option_spec(&model)?;
    let mut strikes = vec![opt.strike];
    strikes.extend(args.strikes.iter().copied());
    let state = ValuationState::initial(&model);
    let mut results: Vec<PriceResult> = Vec::new();
    let want = |m: PriceMethod| args.method == m || args.method == PriceMethod::All;
    if want(PriceMethod::Fourier) || args.dump_charfn.is_some() {
        let fourier = price_fourier_strikes(&model, &strikes, opt.exercise, state, &cfg.fourier)?;
        if let Some(path) = &args.dump_charfn {
            let phi_end = fourier[0].diagnostics.phi_truncation.unwrap_or(cfg.fourier.riccati.phi_max);
            dump_charfn(&model, opt.exercise, phi_end, args.dump_step, cfg, path)?;
        }
        if want(PriceMethod::Fourier) {
            results.extend(fourier);
        }
    }
    if want(PriceMethod::Mc) {
        let grid = cfg.grid_spec()?;
        results.extend(price_mc_strikes(&model, &strikes, opt.exercise, &grid, Measure::QTilde)?);
    }
    let mut skipped = None;
    if want(PriceMethod::Black76) {
        for &k in &strikes {
            let o = crate::models::OptionSpec::new(k, opt.exercise, model.delivery())?;
            match price_black76(&model, &o, state) {
                Ok(r) => results.push(r),
                Err(e) if args.method == PriceMethod::All && e.is_validation() => {
                    skipped = Some(format!("black76 skipped: {e}"));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mut warnings: Vec<String> = results.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
    warnings.extend(skipped);
    warnings.dedup();
    let mut report = Report::table(
        vec!["method", "strike", "exercise", "call", "put", "q1", "q2", "stderr"],
        results.iter().map(price_row).collect(),
    );
    report.json = Some(if results.len() == 1 { to_json(&results[0])? } else { to_json(&results)? });
    report.warnings = warnings;
    Ok(report)
}

fn validate(cfg: &RunConfig, args: &ValidateArgs) -> Result<Report> {
    let base = cfg.swap_model()?;
    let exercise = cfg.exercise();
    let grid = cfg.grid_spec()?;
    if (grid.t_end - exercise).abs() > 1e-12 {
        return Err(Error::invalid("grid.t_end", "must equal the option exercise time for validation"));
    }
    let f0 = base.params().f0;
    let strikes: Vec<f64> = args.moneyness.iter().map(|m| m * f0).collect();
    let mut shapes = vec![
        VolStructure::REFERENCE_TRADING,
        VolStructure::REFERENCE_SAMUELSON,
        VolStructure::REFERENCE_DELIVERY,
    ];
    if !shapes.contains(base.vol()) {
        shapes.push(base.vol().clone());
    }
    let state = ValuationState::initial(&base);
    let mut rows = Vec::new();
    let mut failed = false;
    for vol in shapes {
        let model = SwapModel::new(*base.params(), vol, base.weight().clone(), *base.delivery())?;
        let fourier = price_fourier_strikes(&model, &strikes, exercise, state, &cfg.fourier)?;
        let mc = price_mc_strikes(&model, &strikes, exercise, &grid, Measure::QTilde)?;
        for (f, m) in fourier.iter().zip(&mc) {
            let se = m.stderr.unwrap_or(0.0);
            let z = if se > 0.0 { (f.call - m.call) / se } else { f64::INFINITY };
            let pass = z.abs() < args.z_max;
            failed |= !pass;
            rows.push(vec![
                Cell::Text(model.vol().tag().into()),
                Cell::Num(f.strike),
                Cell::Num(f.call),
                Cell::Num(m.call),
                Cell::Num(se),
                Cell::Num(z),
                Cell::Bool(pass),
            ]);
        }
    }
    let mut report = Report::table(vec!["model", "strike", "fourier", "mc", "stderr", "z", "pass"], rows);
    report.failed = failed;
    Ok(report)
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn table3() -> Result<Report> {
    let month = DeliveryPeriod::new(0.75, 0.75 + 1.0 / 12.0)?;
    let mut rows = Vec::new();
    let mut failed = false;
    for (lambda, e_d1, e_var, e_d2) in TABLE3_EXPECTED {
        let (d1, d2) = d1_d2(lambda, month.length())?;
        let var = samuelson_variance(lambda, &month)?;
        for (name, value, expected) in [("d1", d1, e_d1), ("variance", var, e_var), ("d2", d2, e_d2)] {
            let ok = (round4(value) - expected).abs() < 1e-9;
            failed |= !ok;
            rows.push(vec![
                Cell::Num(lambda),
                Cell::Text(name.into()),
                Cell::Num(value),
                Cell::Num(expected),
                Cell::Bool(ok),
            ]);
        }
    }
    let mut report = Report::table(vec!["lambda", "quantity", "computed", "expected", "match"], rows);
    report.failed = failed;
    Ok(report)
}

/// Runs a parsed command and returns its report.
pub fn execute(cli: &Cli) -> Result<(Report, RunConfig)> {
    let cfg = resolve_config(&cli.global)?;
    let run = || -> Result<Report> {
        match &cli.command {
            Command::Check => check(&cfg),
            Command::Decompose => decompose(&cfg, cli.global.steps),
            Command::Simulate(a) => simulate(&cfg, a),
            Command::Price(a) => price(&cfg, a),
            Command::Validate(a) => validate(&cfg, a),
            Command::Table3 => table3(),
        }
    };
    let report = match cli.global.workers {
        Some(0) => return Err(Error::invalid("workers", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    Ok((report, cfg))
}

fn error_body(e: &Error) -> String {
    json!({"error": e.kind(), "message": e.to_string()}).to_string()
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = execute(&cli).and_then(|(report, cfg)| {
        let text = report.render(cfg.output.format)?;
        match &cfg.output.path {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.failed {
                eprintln!("{}", json!({"error": "check_failed", "message": "one or more checks failed"}));
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{}", error_body(&e));
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
