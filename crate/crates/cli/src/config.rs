use std::path::{Path, PathBuf};

use panoptrack::metrics::EvalConfig;
use panoptrack::sim::SimConfig;
use panoptrack::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Options of `simulate` beyond the generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    /// Number of sequences; sequence `i` uses seed `sim.seed + i`.
    pub sequences: usize,
    pub noise_sigma: f64,
    /// Write ground-truth offsets into the detections files.
    pub offsets: bool,
    /// Give every instance the same embedding.
    pub shared_embedding: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            sequences: 1,
            noise_sigma: 0.0,
            offsets: true,
            shared_embedding: false,
        }
    }
}

/// Contents of the TOML file passed with `--config`. Every section and key
/// is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Class table file; defaults to `classes.json` next to the input data.
    pub class_table: Option<PathBuf>,
    /// Where `eval` writes reports when `--out` is not given.
    pub report_dir: Option<PathBuf>,
    /// Worker threads for per-sequence work; 0 picks the number of cores.
    pub jobs: usize,
    pub eval: EvalConfig,
    pub tracker: TrackerConfig,
    pub sim: SimConfig,
    pub simulate: SimulateOptions,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: CliConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        CliConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.class_table {
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "class_table {} not found",
                    p.display()
                )));
            }
        }
        self.tracker.validate()?;
        self.sim.validate()?;
        let s = &self.simulate;
        if s.sequences == 0 {
            return Err(CliError::Config(
                "simulate.sequences must be at least 1".into(),
            ));
        }
        if !(s.noise_sigma.is_finite() && s.noise_sigma >= 0.0) {
            return Err(CliError::Config(format!(
                "simulate.noise_sigma {} must be non-negative",
                s.noise_sigma
            )));
        }
        Ok(())
    }
}
