//! `generate`: synthetic sessions with their truth files.

use std::path::{Path, PathBuf};

use formsense_core::ingestion::series_to_string;
use formsense_core::rig::{generate, generate_dataset, RigOutput};

use super::{truth_path, write_text, SERIES_EXTENSION};
use crate::config::PipelineConfig;
use crate::error::{Result, StageExt};

/// Writes one session from `[rig]` to `out`, or to the sessions directory
/// when `out` is `None`. Returns the written paths.
pub fn generate_session(cfg: &PipelineConfig, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let rig = cfg.rig_config();
    let spec = cfg.spec();
    rig.check(spec).stage("config")?;
    let output = generate(&rig, spec).stage("generate")?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let class = rig.fault_mode.unwrap_or(spec.correct_class().id);
            cfg.sessions_dir()
                .join(format!("{}-c{class}-seed{}.{SERIES_EXTENSION}", cfg.exercise, rig.seed))
        }
    };
    write_output(&output, &path)
}

/// Writes the `[dataset]` collection into the sessions directory.
pub fn generate_sessions(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let outputs = generate_dataset(&cfg.dataset_config(), cfg.spec()).stage("generate")?;
    let mut per_class = std::collections::BTreeMap::<u8, usize>::new();
    let mut written = Vec::new();
    for output in &outputs {
        let class = output.truth.label.id;
        let k = per_class.entry(class).or_default();
        let name = format!("{}-c{class}-{:03}.{SERIES_EXTENSION}", cfg.exercise, *k);
        *k += 1;
        written.extend(write_output(output, &cfg.sessions_dir().join(name))?);
    }
    Ok(written)
}

fn write_output(output: &RigOutput, path: &Path) -> Result<Vec<PathBuf>> {
    let truth = truth_path(path);
    write_text(path, &series_to_string(&output.series))?;
    write_text(&truth, &(serde_json::to_string_pretty(&output.truth)? + "\n"))?;
    Ok(vec![path.to_path_buf(), truth])
}
