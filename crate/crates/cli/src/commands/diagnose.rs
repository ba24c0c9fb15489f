//! `diagnose`: offline per-rep diagnosis of one landmark file.

use std::path::Path;

use formsense_core::ingestion::read_series;
use formsense_core::pipeline::RepOutcome;
use formsense_core::Execution;

use super::{load_pipeline, Table};
use crate::config::PipelineConfig;
use crate::error::{Result, StageExt};

pub const DIAGNOSIS_HEADER: [&str; 5] = ["rep", "outcome", "label", "recommendation", "probabilities"];

pub fn diagnose(cfg: &PipelineConfig, series_path: &Path, exec: Execution) -> Result<Vec<RepOutcome>> {
    cfg.check()?;
    let pipeline = load_pipeline(cfg)?;
    let series = read_series(series_path).stage("read")?;
    pipeline.diagnose_series(&series, exec).stage("diagnose")
}

/// One table row per outcome. Probabilities are `id:p` pairs joined by `;`.
pub fn diagnosis_row(outcome: &RepOutcome) -> Vec<String> {
    match outcome {
        RepOutcome::Diagnosed(d) => vec![
            d.rep_index.to_string(),
            "diagnosed".into(),
            d.label.id.to_string(),
            d.recommendation.clone(),
            d.probabilities
                .iter()
                .map(|(c, p)| format!("{c}:{p:.4}"))
                .collect::<Vec<_>>()
                .join(";"),
        ],
        RepOutcome::Rejected {
            rep_index, reason, ..
        } => vec![
            rep_index.to_string(),
            "rejected".into(),
            String::new(),
            reason.clone(),
            String::new(),
        ],
    }
}

pub fn diagnosis_table(outcomes: &[RepOutcome]) -> Table {
    let mut table = Table::new(&DIAGNOSIS_HEADER);
    for o in outcomes {
        table.push(diagnosis_row(o));
    }
    table
}

/// Class ids of the diagnosed reps, in rep order.
pub fn label_sequence(outcomes: &[RepOutcome]) -> Vec<Option<u8>> {
    outcomes.iter().map(|o| o.diagnosis().map(|d| d.label.id)).collect()
}
