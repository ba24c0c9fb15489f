//! Pipeline configuration: one TOML file, environment overrides for the data
//! directory and seed, then command-line overrides.

use std::path::{Path, PathBuf};

use formsense_core::diagnosis::{EvalConfig, ForestConfig, SearchSpace};
use formsense_core::engine::{EngineArch, TrainConfig, Variant};
use formsense_core::preprocess::{QualityGate, SmoothingConfig};
use formsense_core::rig::{DatasetConfig, RigConfig};
use formsense_core::segment::OnlineConfig;
use formsense_core::{exercise_preset, Exercise, ExerciseSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError, Result, StageExt};

pub const DATA_DIR_ENV: &str = "FORMSENSE_DATA_DIR";
pub const SEED_ENV: &str = "FORMSENSE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WatchConfig {
    /// Replay file streams at their recorded frame rate.
    pub pace: bool,
    /// Capacity of each queue between ingestion, segmentation and diagnosis.
    pub queue_capacity: usize,
}

impl Default for WatchConfig {
    fn default() -> Self {
        WatchConfig {
            pace: true,
            queue_capacity: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub exercise: Exercise,
    pub seed: u64,
    pub data_dir: PathBuf,
    /// Defaults to `<data_dir>/engine.json`.
    pub engine_path: Option<PathBuf>,
    /// Defaults to `<data_dir>/forest.json`.
    pub forest_path: Option<PathBuf>,
    pub variant: Variant,
    pub smoothing: SmoothingConfig,
    pub gate: QualityGate,
    pub arch: EngineArch,
    pub train: TrainConfig,
    pub forest: ForestConfig,
    /// Randomized forest search; `forest` is used as is when absent.
    pub search: Option<SearchSpace>,
    /// Share of reps per class used for training.
    pub train_fraction: f64,
    pub rig: RigConfig,
    pub dataset: DatasetConfig,
    pub online: OnlineConfig,
    pub watch: WatchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            exercise: Exercise::Squats,
            seed: 0,
            data_dir: PathBuf::from("data"),
            engine_path: None,
            forest_path: None,
            variant: Variant::In,
            smoothing: SmoothingConfig::default(),
            gate: QualityGate::default(),
            arch: EngineArch::default(),
            train: TrainConfig::default(),
            forest: ForestConfig::default(),
            search: Some(SearchSpace::default()),
            train_fraction: 0.6,
            rig: RigConfig::default(),
            dataset: DatasetConfig::default(),
            online: OnlineConfig::default(),
            watch: WatchConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads `path`, or starts from defaults when `None`, then applies the
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(io_at(p))?)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Applies `FORMSENSE_DATA_DIR` and `FORMSENSE_SEED` through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(dir) = lookup(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            self.data_dir = PathBuf::from(dir);
        }
        if let Some(seed) = lookup(SEED_ENV).filter(|s| !s.is_empty()) {
            self.seed = seed
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{seed}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        if self.data_dir.as_os_str().is_empty() {
            return Err(CliError::Config("data_dir is empty".into()));
        }
        for p in [&self.engine_path, &self.forest_path].into_iter().flatten() {
            if p.as_os_str().is_empty() || p.file_name().is_none() {
                return Err(CliError::Config(format!("`{}` is not a file path", p.display())));
            }
        }
        self.smoothing.check().stage("config")?;
        self.gate.check().stage("config")?;
        self.eval_config().check().stage("config")?;
        Ok(())
    }

    pub fn spec(&self) -> &'static ExerciseSpec {
        exercise_preset(self.exercise)
    }

    pub fn engine_path(&self) -> PathBuf {
        self.engine_path.clone().unwrap_or_else(|| self.data_dir.join("engine.json"))
    }

    pub fn forest_path(&self) -> PathBuf {
        self.forest_path.clone().unwrap_or_else(|| self.data_dir.join("forest.json"))
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }

    /// Per-variant engine checkpoints used for rollout comparisons.
    pub fn variant_engine_path(&self, variant: Variant) -> PathBuf {
        self.data_dir.join("engines").join(format!("engine-{variant}.json"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.data_dir.join("report.json")
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            train_fraction: self.train_fraction,
            variant: self.variant,
            arch: self.arch.clone(),
            train: self.train.clone(),
            forest: self.forest.clone(),
            search: self.search.clone(),
        }
    }

    /// The single-session rig settings with exercise and seed applied.
    pub fn rig_config(&self) -> RigConfig {
        RigConfig {
            exercise: self.exercise,
            seed: self.seed,
            ..self.rig.clone()
        }
    }

    pub fn dataset_config(&self) -> DatasetConfig {
        DatasetConfig {
            exercise: self.exercise,
            seed: self.seed,
            ..self.dataset.clone()
        }
    }
}
