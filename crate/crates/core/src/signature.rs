//! DTFT error signatures: a fixed-length amplitude and phase vector per rep,
//! built from the per-landmark rollout error series.
//!
//! Every landmark series is transformed on the grid `omega_k = k pi / 10`,
//! `k = 0..=10`, so reps of any duration map to `22 * landmarks` features.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::RolloutError;
use crate::error::{Error, Result};
use crate::model::ExerciseSpec;

/// Grid points per landmark.
pub const GRID_POINTS: usize = 11;
/// Features per landmark: amplitudes then phases.
pub const FEATURES_PER_LANDMARK: usize = 2 * GRID_POINTS;
/// Identifies the frequency grid in stored signatures.
pub const GRID_TAG: &str = "k*pi/10,k=0..10";

/// `omega_k` of the signature grid.
pub fn grid_omega(k: usize) -> f64 {
    k as f64 * std::f64::consts::PI / 10.0
}

/// `sum_n x[n] e^(-i omega n)`, n from 0.
pub fn dtft_at(signal: &[f64], omega: f64) -> Result<Complex64> {
    if signal.is_empty() {
        return Err(Error::input("DTFT of an empty signal"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &x) in signal.iter().enumerate() {
        let (s, c) = (omega * n as f64).sin_cos();
        acc += Complex64::new(x * c, -x * s);
    }
    Ok(acc)
}

/// [`dtft_at`] at `grid_omega(k)`, with `omega_k n` reduced modulo `2 pi`
/// through integer arithmetic so multiples of `pi / 2` are exact.
fn dtft_grid(signal: &[f64], k: usize) -> Complex64 {
    let table: [(f64, f64); 20] = std::array::from_fn(|m| match m {
        0 => (0.0, 1.0),
        5 => (1.0, 0.0),
        10 => (0.0, -1.0),
        15 => (-1.0, 0.0),
        _ => (m as f64 * std::f64::consts::PI / 10.0).sin_cos(),
    });
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &x) in signal.iter().enumerate() {
        let (s, c) = table[(k * n) % 20];
        acc += Complex64::new(x * c, -x * s);
    }
    acc
}

/// Magnitude and phase; phase in (-pi, pi], and 0 for a zero component.
pub fn amplitude_phase(z: Complex64) -> (f64, f64) {
    let amp = z.norm();
    if amp == 0.0 {
        return (0.0, 0.0);
    }
    let phase = z.im.atan2(z.re);
    (amp, if phase <= -std::f64::consts::PI { std::f64::consts::PI } else { phase })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSignature {
    pub grid: String,
    pub landmarks: usize,
    /// Per landmark in spec order: 11 amplitudes, then 11 phases.
    pub values: Vec<f64>,
}

impl ErrorSignature {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn amplitudes(&self, landmark: usize) -> &[f64] {
        let o = landmark * FEATURES_PER_LANDMARK;
        &self.values[o..o + GRID_POINTS]
    }

    pub fn phases(&self, landmark: usize) -> &[f64] {
        let o = landmark * FEATURES_PER_LANDMARK + GRID_POINTS;
        &self.values[o..o + GRID_POINTS]
    }
}

/// Signature of one rollout error.
pub fn signature(error: &RolloutError) -> Result<ErrorSignature> {
    let mut values = Vec::with_capacity(error.per_landmark.len() * FEATURES_PER_LANDMARK);
    for (l, series) in error.per_landmark.iter().enumerate() {
        if series.is_empty() {
            return Err(Error::input(format!("rollout error series of landmark {l} is empty")));
        }
        let (amps, phases): (Vec<f64>, Vec<f64>) =
            (0..GRID_POINTS).map(|k| amplitude_phase(dtft_grid(series, k))).unzip();
        values.extend(amps);
        values.extend(phases);
    }
    Ok(ErrorSignature {
        grid: GRID_TAG.to_string(),
        landmarks: error.per_landmark.len(),
        values,
    })
}

/// Column names for flat signature rows: `<landmark>_amp_<k>` and
/// `<landmark>_phase_<k>`.
pub fn signature_header(spec: &ExerciseSpec) -> Vec<String> {
    let mut cols = Vec::with_capacity(spec.landmarks.len() * FEATURES_PER_LANDMARK);
    for id in &spec.landmarks {
        for part in ["amp", "phase"] {
            for k in 0..GRID_POINTS {
                cols.push(format!("{id}_{part}_{k}"));
            }
        }
    }
    cols
}
