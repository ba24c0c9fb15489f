//! Free rollout of a rep from its first frame and per-landmark error series.

use serde::{Deserialize, Serialize};

use super::graph::landmark_states;
use super::Engine;
use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, RepSegment};
use crate::par::{map_slice, Execution};

/// Squared position error of a rollout, per landmark and step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutError {
    /// `per_landmark[l][t]`: mean over x and y of the squared error of the
    /// predicted position at frame t + 1. Preset landmark order.
    pub per_landmark: Vec<Vec<f64>>,
    /// Mean over landmarks and steps.
    pub aggregate: f64,
}

impl RolloutError {
    pub fn new(per_landmark: Vec<Vec<f64>>) -> Self {
        let count: usize = per_landmark.iter().map(Vec::len).sum();
        let sum: f64 = per_landmark.iter().flatten().sum();
        RolloutError {
            aggregate: if count == 0 { 0.0 } else { sum / count as f64 },
            per_landmark,
        }
    }

    pub fn steps(&self) -> usize {
        self.per_landmark.first().map_or(0, Vec::len)
    }
}

fn check(engine: &Engine, segment: &RepSegment, spec: &ExerciseSpec) -> Result<()> {
    if engine.exercise != spec.exercise {
        return Err(Error::input(format!(
            "engine trained for {}, asked to roll out {}",
            engine.exercise, spec.exercise
        )));
    }
    if segment.len() < 2 {
        return Err(Error::input(format!("rep {} has fewer than 2 frames", segment.rep_index)));
    }
    if segment.trajectories.len() != spec.landmarks.len() {
        return Err(Error::Shape(format!(
            "rep {} has {} trajectories, preset {} landmarks",
            segment.rep_index,
            segment.trajectories.len(),
            spec.landmarks.len()
        )));
    }
    Ok(())
}

/// Rolls `segment` out from frame 0: each step predicts the next velocity
/// from the predicted state, integrates position, and rebuilds relation
/// attributes from the prediction. Dropout is off.
pub fn rollout(engine: &Engine, segment: &RepSegment, spec: &ExerciseSpec) -> Result<RolloutError> {
    check(engine, segment, spec)?;
    let topo = engine.topology(spec);
    let k = spec.landmarks.len();
    let mut state = landmark_states(segment, 0);
    let mut errors = vec![Vec::with_capacity(segment.len() - 1); k];
    for t in 0..segment.len() - 1 {
        let v = engine.predict_velocities(&topo, &state);
        for l in 0..k {
            let p = [state[l][0] + v[l][0], state[l][1] + v[l][1]];
            state[l] = [p[0], p[1], v[l][0], v[l][1]];
            let truth = segment.trajectories[l][t + 1];
            errors[l].push(((p[0] - truth[0]).powi(2) + (p[1] - truth[1]).powi(2)) / 2.0);
        }
    }
    Ok(RolloutError::new(errors))
}

/// Teacher-forced one-step errors: like [`rollout`] but every step starts
/// from the observed state.
pub fn one_step_errors(engine: &Engine, segment: &RepSegment, spec: &ExerciseSpec) -> Result<RolloutError> {
    check(engine, segment, spec)?;
    let topo = engine.topology(spec);
    let k = spec.landmarks.len();
    let mut errors = vec![Vec::with_capacity(segment.len() - 1); k];
    for t in 0..segment.len() - 1 {
        let state = landmark_states(segment, t);
        let v = engine.predict_velocities(&topo, &state);
        for l in 0..k {
            let truth = segment.trajectories[l][t + 1];
            let p = [state[l][0] + v[l][0], state[l][1] + v[l][1]];
            errors[l].push(((p[0] - truth[0]).powi(2) + (p[1] - truth[1]).powi(2)) / 2.0);
        }
    }
    Ok(RolloutError::new(errors))
}

/// Rollouts of many reps, in input order.
pub fn rollout_all(
    engine: &Engine,
    segments: &[RepSegment],
    spec: &ExerciseSpec,
    exec: Execution,
) -> Result<Vec<RolloutError>> {
    map_slice(exec, segments, |s| rollout(engine, s, spec)).into_iter().collect()
}
