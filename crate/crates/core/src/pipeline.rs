//! End-to-end rep processing: segmentation, quality gate, normalization,
//! rollout, signature and classification.

use serde::{Deserialize, Serialize};

use crate::diagnosis::{classify, Diagnosis, Forest, LabeledRep};
use crate::engine::{rollout, Engine};
use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, LandmarkSeries, RepSegment};
use crate::par::{map_slice, Execution};
use crate::preprocess::{build_segment, gate_rep, GateDecision, QualityGate, SmoothingConfig};
use crate::segment::{counting_signal, segment_reps};
use crate::signature::{signature, FEATURES_PER_LANDMARK};

/// What happened to one detected rep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RepOutcome {
    Diagnosed(Diagnosis),
    Rejected {
        rep_index: usize,
        start_frame: usize,
        end_frame: usize,
        reason: String,
    },
}

impl RepOutcome {
    pub fn diagnosis(&self) -> Option<&Diagnosis> {
        match self {
            RepOutcome::Diagnosed(d) => Some(d),
            RepOutcome::Rejected { .. } => None,
        }
    }
}

/// Reps of a series that passed the quality gate, plus the rejected ones.
#[derive(Debug, Clone, Default)]
pub struct ExtractedReps {
    pub segments: Vec<RepSegment>,
    /// (rep index, start, end, reason).
    pub rejected: Vec<(usize, usize, usize, String)>,
}

fn prepare(
    series: &LandmarkSeries,
    spec: &ExerciseSpec,
    rep_index: usize,
    start: usize,
    end: usize,
    smoothing: &SmoothingConfig,
    gate: &QualityGate,
) -> Result<std::result::Result<RepSegment, String>> {
    let segment = build_segment(series, spec, rep_index, start, end, smoothing)?;
    Ok(match gate_rep(&segment, series, spec, gate, smoothing)? {
        GateDecision::Accept => Ok(segment),
        GateDecision::Reject { reason, .. } => Err(reason),
    })
}

/// Segments `series` by its counting signal and normalizes every rep that
/// passes the gate.
pub fn extract_reps(
    series: &LandmarkSeries,
    spec: &ExerciseSpec,
    smoothing: &SmoothingConfig,
    gate: &QualityGate,
) -> Result<ExtractedReps> {
    let mut out = ExtractedReps::default();
    if series.is_empty() {
        return Ok(out);
    }
    let bounds = segment_reps(&counting_signal(series, spec)?);
    for (i, &(s, e)) in bounds.reps.iter().enumerate() {
        match prepare(series, spec, i, s, e, smoothing, gate)? {
            Ok(seg) => out.segments.push(seg),
            Err(reason) => out.rejected.push((i, s, e, reason)),
        }
    }
    Ok(out)
}

/// Extracted reps of several series, each labeled with its series label.
pub fn labeled_reps(
    sessions: &[(LandmarkSeries, u8)],
    spec: &ExerciseSpec,
    smoothing: &SmoothingConfig,
    gate: &QualityGate,
    exec: Execution,
) -> Result<Vec<LabeledRep>> {
    let per = map_slice(exec, sessions, |(series, label)| {
        extract_reps(series, spec, smoothing, gate).map(|x| {
            x.segments
                .into_iter()
                .map(|segment| LabeledRep { segment, label: *label })
                .collect::<Vec<_>>()
        })
    });
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// A trained engine and forest ready to diagnose reps of one exercise.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub spec: ExerciseSpec,
    pub engine: Engine,
    pub forest: Forest,
    pub smoothing: SmoothingConfig,
    pub gate: QualityGate,
}

impl Pipeline {
    pub fn new(
        spec: &ExerciseSpec,
        engine: Engine,
        forest: Forest,
        smoothing: SmoothingConfig,
        gate: QualityGate,
    ) -> Result<Self> {
        if engine.exercise != spec.exercise {
            return Err(Error::input(format!(
                "engine trained for {}, pipeline is for {}",
                engine.exercise, spec.exercise
            )));
        }
        let expected = FEATURES_PER_LANDMARK * spec.landmarks.len();
        if forest.features != expected {
            return Err(Error::input(format!(
                "forest expects {} features, {} signatures have {expected}",
                forest.features, spec.exercise
            )));
        }
        if let Some(c) = forest.classes.iter().find(|&&c| spec.class(c).is_none()) {
            return Err(Error::input(format!("forest class {c} unknown to {}", spec.exercise)));
        }
        smoothing.check()?;
        gate.check()?;
        Ok(Pipeline {
            spec: spec.clone(),
            engine,
            forest,
            smoothing,
            gate,
        })
    }

    /// Diagnoses frames `start..=end` of `series` as rep `rep_index`.
    pub fn diagnose_rep(&self, series: &LandmarkSeries, rep_index: usize, start: usize, end: usize) -> Result<RepOutcome> {
        match prepare(series, &self.spec, rep_index, start, end, &self.smoothing, &self.gate)? {
            Err(reason) => Ok(RepOutcome::Rejected {
                rep_index,
                start_frame: start,
                end_frame: end,
                reason,
            }),
            Ok(segment) => {
                let err = rollout(&self.engine, &segment, &self.spec)?;
                let mut d = classify(&self.forest, &signature(&err)?, &self.spec)?;
                d.rep_index = rep_index;
                Ok(RepOutcome::Diagnosed(d))
            }
        }
    }

    /// Offline diagnosis of every rep of `series`, in rep order.
    pub fn diagnose_series(&self, series: &LandmarkSeries, exec: Execution) -> Result<Vec<RepOutcome>> {
        if series.is_empty() {
            return Ok(Vec::new());
        }
        let bounds = segment_reps(&counting_signal(series, &self.spec)?);
        let indexed: Vec<(usize, (usize, usize))> = bounds.reps.into_iter().enumerate().collect();
        map_slice(exec, &indexed, |&(i, (s, e))| self.diagnose_rep(series, i, s, e))
            .into_iter()
            .collect()
    }
}
