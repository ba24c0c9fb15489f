//! `evaluate`: repeated stratified splits with an optional shuffled-label
//! control.

use std::path::PathBuf;

use formsense_core::diagnosis::{evaluate, shuffle_labels, EvaluationReport};
use formsense_core::par::derive_seed;
use formsense_core::Execution;
use serde::{Deserialize, Serialize};

use super::{load_dataset, write_text};
use crate::config::PipelineConfig;
use crate::error::{CliError, Result, StageExt};

/// Contents of `evaluation.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub seeds: Vec<u64>,
    pub reps: usize,
    pub real: EvaluationReport,
    /// Same splits on randomly permuted labels.
    pub shuffled: Option<EvaluationReport>,
}

/// Seeds `seed, seed + 1, ..` for `runs` runs.
pub fn run_seeds(seed: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|i| seed.wrapping_add(i)).collect()
}

pub fn evaluate_command(
    cfg: &PipelineConfig,
    runs: usize,
    with_control: bool,
    exec: Execution,
) -> Result<(EvaluationSummary, PathBuf)> {
    cfg.check()?;
    if runs == 0 {
        return Err(CliError::Config("evaluation needs at least one run".into()));
    }
    let dataset = load_dataset(cfg, exec)?;
    let seeds = run_seeds(cfg.seed, runs);
    let eval_cfg = cfg.eval_config();
    let real = evaluate(&dataset, cfg.spec(), &eval_cfg, &seeds, exec).stage("evaluate")?;
    let shuffled = if with_control {
        let control = shuffle_labels(&dataset, derive_seed(cfg.seed, 3));
        Some(evaluate(&control, cfg.spec(), &eval_cfg, &seeds, exec).stage("evaluate control")?)
    } else {
        None
    };
    let summary = EvaluationSummary {
        seeds,
        reps: dataset.len(),
        real,
        shuffled,
    };
    let path = cfg.data_dir.join("evaluation.json");
    write_text(&path, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok((summary, path))
}
