//! Experiment configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! seed = 0
//! output_dir = "results"
//!
//! [data]
//! train_dir = "corpus/train"
//! val_dir = "corpus/val"
//! test_dir = "corpus/test"
//! sample_rate = 16000
//! crop_seconds = 2.0
//!
//! [stft]
//! window_length = 1024
//!
//! [model]
//! layers = 15
//!
//! [train]
//! learning_rate = 1e-4
//!
//! [solvers]
//! admm_budgets = [15, 30, 75, 150, 1500]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::StftConfig;
use crate::unfolded::{TrainConfig, DEFAULT_LAYERS, DEFAULT_RHO, DEFAULT_SEGMENTS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub train_dir: Option<PathBuf>,
    pub val_dir: Option<PathBuf>,
    pub test_dir: Option<PathBuf>,
    /// Rate every file must have (after resampling, if enabled).
    pub sample_rate: u32,
    /// Clips are cut to this many seconds; `0` keeps them whole.
    pub crop_seconds: f64,
    /// Resample files whose rate differs instead of rejecting them.
    pub resample: bool,
    /// At most this many files per split, taken in file-name order.
    pub train_items: usize,
    pub val_items: usize,
    pub test_items: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            train_dir: None,
            val_dir: None,
            test_dir: None,
            sample_rate: 16000,
            crop_seconds: 2.0,
            resample: false,
            train_items: 40,
            val_items: 4,
            test_items: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub layers: usize,
    pub segments: usize,
    pub rho: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: DEFAULT_LAYERS,
            segments: DEFAULT_SEGMENTS,
            rho: DEFAULT_RHO,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub gla_budgets: Vec<usize>,
    pub admm_budgets: Vec<usize>,
    pub admm_rho: f64,
    /// Numbers of back-to-back network applications evaluated per model.
    pub uadmm_repeats: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gla_budgets: vec![1500],
            admm_budgets: vec![15, 30, 75, 150, 1500],
            admm_rho: DEFAULT_RHO,
            uadmm_repeats: vec![1, 2, 4],
        }
    }
}

/// Grid on which learned metrics are sampled in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub r_values: Vec<f64>,
    pub ymin: f64,
    pub ymax: f64,
    pub points: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            r_values: vec![1.0],
            ymin: 0.0,
            ymax: 3.0,
            points: 61,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub stft: StftConfig,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub solvers: SolverConfig,
    pub metric: MetricConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            stft: StftConfig::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            solvers: SolverConfig::default(),
            metric: MetricConfig::default(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| cfg_err(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => cfg_err(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for d in [
            &mut self.data.train_dir,
            &mut self.data.val_dir,
            &mut self.data.test_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(d);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stft
            .validate()
            .map_err(|e| cfg_err(format!("stft: {e}")))?;
        if self.data.sample_rate == 0 {
            return Err(cfg_err("data.sample_rate must be positive"));
        }
        if !(self.data.crop_seconds >= 0.0) || !self.data.crop_seconds.is_finite() {
            return Err(cfg_err("data.crop_seconds must be >= 0"));
        }
        if self.model.segments == 0 {
            return Err(cfg_err("model.segments must be >= 1"));
        }
        for (name, rho) in [
            ("model.rho", self.model.rho),
            ("solvers.admm_rho", self.solvers.admm_rho),
        ] {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(cfg_err(format!("{name} must be positive, got {rho}")));
            }
        }
        self.train_config().validate()?;
        if self.solvers.uadmm_repeats.contains(&0) {
            return Err(cfg_err("solvers.uadmm_repeats entries must be >= 1"));
        }
        let m = &self.metric;
        if m.points < 2 || !(m.ymin < m.ymax) || m.r_values.iter().any(|r| !(*r >= 0.0)) {
            return Err(cfg_err(
                "metric needs points >= 2, ymin < ymax and r values >= 0",
            ));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            seed: self.seed,
        }
    }

    pub fn crop(&self) -> Option<f64> {
        if self.data.crop_seconds > 0.0 {
            Some(self.data.crop_seconds)
        } else {
            None
        }
    }

    /// A configured directory that must exist now.
    pub fn require_dir<'a>(&self, dir: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        let d = dir
            .as_deref()
            .ok_or_else(|| cfg_err(format!("data.{key} is not set")))?;
        if !d.is_dir() {
            return Err(cfg_err(format!(
                "data.{key} = {} is not a directory",
                d.display()
            )));
        }
        Ok(d)
    }
}
