//! `export-plots`: tidy tables for redrawing the counting signal with its
//! peaks, per-rep stick figures and per-variant rollout error bars.

use std::path::{Path, PathBuf};

use formsense_core::engine::{load_engine, rollout_all, Variant};
use formsense_core::ingestion::read_series;
use formsense_core::pipeline::extract_reps;
use formsense_core::segment::{counting_signal, segment_reps, RepBoundaries};
use formsense_core::{Execution, LandmarkSeries, RepSegment};

use super::{num, write_text, Table};
use crate::config::PipelineConfig;
use crate::error::{Result, StageExt};

pub const SIGNAL_FILE: &str = "signal.tsv";
pub const PEAKS_FILE: &str = "peaks.tsv";
pub const STICK_FILE: &str = "stick.tsv";
pub const EDGES_FILE: &str = "stick_edges.tsv";
pub const ROLLOUT_FILE: &str = "rollout_mse.tsv";

pub fn signal_table(series: &LandmarkSeries, signal: &[f64]) -> Table {
    let mut t = Table::new(&["frame", "timestamp", "signal"]);
    for (i, (f, s)) in series.frames.iter().zip(signal).enumerate() {
        t.push(vec![i.to_string(), num(f.timestamp), num(*s)]);
    }
    t
}

/// Every peak with its prominence, whether it was kept, and the cutoff.
pub fn peaks_table(bounds: &RepBoundaries) -> Table {
    let mut t = Table::new(&["frame", "height", "prominence", "kept", "cutoff"]);
    let mut rows: Vec<(bool, _)> = bounds
        .kept_peaks
        .iter()
        .map(|p| (true, p))
        .chain(bounds.rejected_peaks.iter().map(|p| (false, p)))
        .collect();
    rows.sort_by_key(|(_, p)| p.index);
    for (kept, p) in rows {
        t.push(vec![
            p.index.to_string(),
            num(p.height),
            num(p.prominence),
            u8::from(kept).to_string(),
            num(bounds.cutoff),
        ]);
    }
    t
}

/// Normalized coordinates of every rep, one row per landmark and frame.
pub fn stick_table(segments: &[RepSegment]) -> Table {
    let mut t = Table::new(&["rep", "frame", "landmark", "x", "y"]);
    for seg in segments {
        for (l, traj) in seg.landmarks.iter().zip(&seg.trajectories) {
            for (f, p) in traj.iter().enumerate() {
                t.push(vec![
                    seg.rep_index.to_string(),
                    f.to_string(),
                    l.to_string(),
                    num(p[0]),
                    num(p[1]),
                ]);
            }
        }
    }
    t
}

pub fn edges_table(cfg: &PipelineConfig) -> Table {
    let mut t = Table::new(&["from", "to"]);
    for (a, b) in &cfg.spec().edges {
        t.push(vec![a.to_string(), b.to_string()]);
    }
    t
}

/// Mean and median rollout error of `segments` under every per-variant
/// engine checkpoint present, in variant order.
pub fn rollout_table(cfg: &PipelineConfig, segments: &[RepSegment], exec: Execution) -> Result<Table> {
    let mut t = Table::new(&["variant", "reps", "mean_mse", "median_mse"]);
    for variant in Variant::ALL {
        let path = cfg.variant_engine_path(variant);
        if !path.exists() || segments.is_empty() {
            continue;
        }
        let engine = load_engine(&path).stage("load engine")?;
        let mut errors: Vec<f64> = rollout_all(&engine, segments, cfg.spec(), exec)
            .stage("rollout")?
            .iter()
            .map(|e| e.aggregate)
            .collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        errors.sort_by(f64::total_cmp);
        let n = errors.len();
        let median = if n % 2 == 1 {
            errors[n / 2]
        } else {
            0.5 * (errors[n / 2 - 1] + errors[n / 2])
        };
        t.push(vec![variant.to_string(), n.to_string(), num(mean), num(median)]);
    }
    Ok(t)
}

/// Writes all plot tables for `series_path` into `out_dir`.
pub fn export_plots(cfg: &PipelineConfig, series_path: &Path, out_dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    cfg.check()?;
    let series = read_series(series_path).stage("read")?;
    let spec = cfg.spec();
    let (signal, bounds, segments) = if series.is_empty() {
        (Vec::new(), RepBoundaries::default(), Vec::new())
    } else {
        let signal = counting_signal(&series, spec).stage("segment")?;
        let bounds = segment_reps(&signal);
        let reps = extract_reps(&series, spec, &cfg.smoothing, &cfg.gate).stage("preprocess")?;
        (signal, bounds, reps.segments)
    };
    let tables = [
        (SIGNAL_FILE, signal_table(&series, &signal)),
        (PEAKS_FILE, peaks_table(&bounds)),
        (STICK_FILE, stick_table(&segments)),
        (EDGES_FILE, edges_table(cfg)),
        (ROLLOUT_FILE, rollout_table(cfg, &segments, exec)?),
    ];
    let mut written = Vec::new();
    for (name, table) in tables {
        let path = out_dir.join(name);
        write_text(&path, &table.render())?;
        written.push(path);
    }
    Ok(written)
}
