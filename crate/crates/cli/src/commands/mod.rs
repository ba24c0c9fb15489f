//! Command implementations. Each returns its results; printing is left to
//! the binary.

pub mod diagnose;
pub mod evaluate;
pub mod export;
pub mod generate;
pub mod train;
pub mod watch;

use std::fs;
use std::path::{Path, PathBuf};

use formsense_core::diagnosis::load_forest;
use formsense_core::engine::load_engine;
use formsense_core::ingestion::read_series;
use formsense_core::pipeline::{labeled_reps, Pipeline};
use formsense_core::rig::RigTruth;
use formsense_core::{Execution, LandmarkSeries};

use crate::config::PipelineConfig;
use crate::error::{io_at, CliError, Result, StageExt};

pub const SERIES_EXTENSION: &str = "csv";
pub const TRUTH_SUFFIX: &str = ".truth.json";

/// Sidecar truth path of a landmark file: `<stem>.truth.json`.
pub fn truth_path(series_path: &Path) -> PathBuf {
    let stem = series_path.file_stem().unwrap_or_default().to_string_lossy();
    series_path.with_file_name(format!("{stem}{TRUTH_SUFFIX}"))
}

pub fn read_truth(path: &Path) -> Result<RigTruth> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Landmark files of the sessions directory with their truth, in file name
/// order. Sessions of other exercises are skipped.
pub fn load_sessions(cfg: &PipelineConfig) -> Result<Vec<(PathBuf, LandmarkSeries, RigTruth)>> {
    let dir = cfg.sessions_dir();
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_at(&dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_at(&dir)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == SERIES_EXTENSION));
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let tp = truth_path(&path);
        if !tp.exists() {
            return Err(CliError::Config(format!("{} has no truth file {}", path.display(), tp.display())));
        }
        let truth = read_truth(&tp)?;
        if truth.exercise != cfg.exercise {
            continue;
        }
        let series = read_series(&path).stage("load")?;
        out.push((path, series, truth));
    }
    Ok(out)
}

/// Normalized, gated reps of every session, labeled by its truth file.
pub fn load_dataset(cfg: &PipelineConfig, exec: Execution) -> Result<Vec<formsense_core::diagnosis::LabeledRep>> {
    let sessions: Vec<(LandmarkSeries, u8)> = load_sessions(cfg)?
        .into_iter()
        .map(|(_, s, t)| (s, t.label.id))
        .collect();
    if sessions.is_empty() {
        return Err(CliError::Stage {
            stage: "load",
            source: formsense_core::Error::Input(format!(
                "no {} sessions in {}",
                cfg.exercise,
                cfg.sessions_dir().display()
            )),
        });
    }
    labeled_reps(&sessions, cfg.spec(), &cfg.smoothing, &cfg.gate, exec).stage("preprocess")
}

/// The engine and forest checkpoints wired into a [`Pipeline`].
pub fn load_pipeline(cfg: &PipelineConfig) -> Result<Pipeline> {
    let engine = load_engine(cfg.engine_path()).stage("load engine")?;
    let forest = load_forest(cfg.forest_path()).stage("load forest")?;
    Pipeline::new(cfg.spec(), engine, forest, cfg.smoothing.clone(), cfg.gate.clone()).stage("load")
}

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(io_at(dir)),
        _ => Ok(()),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(io_at(path))
}

/// Tab-separated table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Fixed-precision float cell.
pub(crate) fn num(v: f64) -> String {
    format!("{v:.6}")
}
