//! `train`: engine and forest checkpoints plus a held-out report.

use std::path::PathBuf;

use formsense_core::diagnosis::{fit_split, fit_split_engine, save_forest, SplitReport};
use formsense_core::engine::{save_engine, Variant};
use formsense_core::{Exercise, Execution};
use serde::{Deserialize, Serialize};

use super::{create_parent, load_dataset, write_text};
use crate::config::PipelineConfig;
use crate::error::{Result, StageExt};

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub exercise: Exercise,
    pub variant: Variant,
    pub seed: u64,
    pub reps: usize,
    pub split: SplitReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainingReport,
    pub files: Vec<PathBuf>,
}

/// Trains engine and forest on the sessions directory and writes the
/// default checkpoints, the per-variant engine copy and the report.
pub fn train(cfg: &PipelineConfig, exec: Execution) -> Result<TrainOutcome> {
    cfg.check()?;
    let dataset = load_dataset(cfg, exec)?;
    let fitted = fit_split(&dataset, cfg.spec(), &cfg.eval_config(), cfg.seed, exec).stage("fit")?;
    let report = TrainingReport {
        exercise: cfg.exercise,
        variant: cfg.variant,
        seed: cfg.seed,
        reps: dataset.len(),
        split: fitted.report,
    };
    let (engine_path, forest_path) = (cfg.engine_path(), cfg.forest_path());
    let variant_path = cfg.variant_engine_path(cfg.variant);
    for p in [&engine_path, &forest_path, &variant_path] {
        create_parent(p)?;
    }
    save_engine(&fitted.engine, &engine_path).stage("save engine")?;
    save_engine(&fitted.engine, &variant_path).stage("save engine")?;
    save_forest(&fitted.forest, &forest_path).stage("save forest")?;
    let report_path = cfg.report_path();
    write_text(&report_path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(TrainOutcome {
        report,
        files: vec![engine_path, variant_path, forest_path, report_path],
    })
}

/// Trains only the configured engine variant on the same training split as
/// [`train`] and writes it to the per-variant path. Returns that path.
pub fn train_engine_only(cfg: &PipelineConfig, exec: Execution) -> Result<PathBuf> {
    cfg.check()?;
    let dataset = load_dataset(cfg, exec)?;
    let (engine, _, _) = fit_split_engine(&dataset, cfg.spec(), &cfg.eval_config(), cfg.seed, exec).stage("fit")?;
    let path = cfg.variant_engine_path(cfg.variant);
    create_parent(&path)?;
    save_engine(&engine, &path).stage("save engine")?;
    Ok(path)
}
