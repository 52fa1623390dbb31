//! JSON run configuration shared by the CLI and the FFI layer.
//!
//! Every section is optional; omitted sections take the reference parameter
//! set (Samuelson decay `lambda = 3.5`, `F0 = 30`, `nu0 = theta = 0.6`,
//! `kappa = 3`, `sigma = 0.4`, `rho = -0.3`, `r = 0.01`, delivery `(3/4, 5/6]`).
//! Times may be written as numbers or as ratios like `"5/6"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    year_fraction, DeliveryPeriod, HestonParams, OptionSpec, SwapModel, VolStructure, WeightFunction,
};
use crate::pricer::FourierConfig;
use crate::simulate::GridSpec;

/// Simulation steps per year when the grid section gives no step count.
pub const DEFAULT_STEPS_PER_YEAR: f64 = 2000.0;
/// Exercise time used when no option section is present.
pub const DEFAULT_EXERCISE: f64 = 0.5;
pub const DEFAULT_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid("output.format", format!("expected csv or json, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Simulation grid; unset fields are derived from the option and the default step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(deserialize_with = "year_fraction")]
    pub t0: f64,
    #[serde(skip_serializing_if = "Option::is_none", deserialize_with = "optional_year_fraction")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    pub seed: u64,
    pub n_paths: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: None,
            n_steps: None,
            seed: 0,
            n_paths: DEFAULT_PATHS,
        }
    }
}

fn optional_year_fraction<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    year_fraction(d).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: VolStructure,
    #[serde(default)]
    pub heston: HestonParams,
    #[serde(default = "DeliveryPeriod::reference")]
    pub delivery: DeliveryPeriod,
    #[serde(default)]
    pub weight: WeightFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<OptionSpec>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub fourier: FourierConfig,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: VolStructure::default(),
            heston: HestonParams::default(),
            delivery: DeliveryPeriod::reference(),
            weight: WeightFunction::default(),
            option: None,
            grid: GridSection::default(),
            fourier: FourierConfig::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.swap_model()?;
        self.option_spec(&model)?;
        self.grid_spec()?;
        self.fourier.validate()
    }

    pub fn swap_model(&self) -> Result<SwapModel> {
        SwapModel::new(self.heston, self.model.clone(), self.weight.clone(), self.delivery)
    }

    /// The configured option, or an at-the-money option exercised at [`DEFAULT_EXERCISE`].
    pub fn option_spec(&self, model: &SwapModel) -> Result<OptionSpec> {
        let spec = self.option.unwrap_or(OptionSpec {
            strike: model.params().f0,
            exercise: DEFAULT_EXERCISE,
        });
        spec.validate(model.delivery())?;
        Ok(spec)
    }

    pub fn exercise(&self) -> f64 {
        self.option.map_or(DEFAULT_EXERCISE, |o| o.exercise)
    }

    /// Grid ending at the exercise time with the default step size unless set explicitly.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        let t_end = g.t_end.unwrap_or_else(|| self.exercise());
        let n_steps = match g.n_steps {
            Some(n) => n,
            None => ((t_end - g.t0) * DEFAULT_STEPS_PER_YEAR).round().max(1.0) as usize,
        };
        let spec = GridSpec::new(g.t0, t_end, n_steps, g.seed, g.n_paths)?;
        if t_end > self.delivery.tau1() {
            return Err(Error::invalid(
                "grid.t_end",
                format!("must not exceed tau1 = {}", self.delivery.tau1()),
            ));
        }
        Ok(spec)
    }
}
