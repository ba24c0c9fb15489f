//! Repetition counting by peak prominence.
//!
//! The counting signal is the vertical coordinate of the exercise's primary
//! landmark, signed so that rep apices are maxima. Peaks are ranked by
//! topographic prominence and kept when their prominence reaches the
//! population standard deviation of all prominences; each kept peak is one
//! rep, delimited by the signal minima between neighbouring kept peaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, LandmarkFrame, LandmarkId, LandmarkSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

/// Inclusive frame ranges of detected reps. Consecutive reps share their
/// boundary frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RepBoundaries {
    pub reps: Vec<(usize, usize)>,
    pub kept_peaks: Vec<Peak>,
    pub rejected_peaks: Vec<Peak>,
    pub cutoff: f64,
}

impl RepBoundaries {
    pub fn count(&self) -> usize {
        self.reps.len()
    }
}

/// All local maxima of `signal` with their prominences. A flat-topped
/// maximum is reported once, at the middle of the plateau (left of centre
/// for even widths). Signals shorter than 3 have no peaks.
pub fn find_peaks(signal: &[f64]) -> Vec<Peak> {
    let n = signal.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let mut i = 1;
    while i < n - 1 {
        if signal[i - 1] < signal[i] {
            let mut ahead = i + 1;
            while ahead < n - 1 && signal[ahead] == signal[i] {
                ahead += 1;
            }
            if signal[ahead] < signal[i] {
                let index = (i + ahead - 1) / 2;
                peaks.push(Peak {
                    index,
                    height: signal[index],
                    prominence: prominence(signal, index),
                });
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Height above the higher of the two lowest points met when walking from
/// the peak towards each side until a strictly higher sample or the end.
fn prominence(signal: &[f64], peak: usize) -> f64 {
    let h = signal[peak];
    let mut left_min = h;
    for &v in signal[..=peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &signal[peak..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Population standard deviation; zero for empty input.
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn argmin(signal: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if signal[i] < signal[best] {
            best = i;
        }
    }
    best
}

/// Offline rep segmentation of a whole counting signal.
pub fn segment_reps(signal: &[f64]) -> RepBoundaries {
    let peaks = find_peaks(signal);
    if peaks.is_empty() {
        return RepBoundaries::default();
    }
    let prominences: Vec<f64> = peaks.iter().map(|p| p.prominence).collect();
    let cutoff = population_std(&prominences);
    let (kept, rejected): (Vec<Peak>, Vec<Peak>) =
        peaks.into_iter().partition(|p| p.prominence >= cutoff);

    let mut reps = Vec::with_capacity(kept.len());
    for (k, p) in kept.iter().enumerate() {
        let start = match k {
            0 => argmin(signal, 0, p.index),
            _ => argmin(signal, kept[k - 1].index, p.index),
        };
        let end = match kept.get(k + 1) {
            Some(next) => argmin(signal, p.index, next.index),
            None => argmin(signal, p.index, signal.len() - 1),
        };
        if end > start {
            reps.push((start, end));
        }
    }
    RepBoundaries {
        reps,
        kept_peaks: kept,
        rejected_peaks: rejected,
        cutoff,
    }
}

fn role_sources(role: LandmarkId) -> Option<(LandmarkId, LandmarkId)> {
    use LandmarkId::*;
    Some(match role {
        Shoulder => (LeftShoulder, RightShoulder),
        Hip => (LeftHip, RightHip),
        Knee => (LeftKnee, RightKnee),
        Hand => (LeftHand, RightHand),
        Toe => (LeftToe, RightToe),
        _ => return None,
    })
}

/// Counting-signal sample of one frame: signed vertical position of the
/// primary landmark. A role landmark missing from the frame is taken from
/// the more visible of its two anatomical sources.
pub fn frame_signal(frame: &LandmarkFrame, spec: &ExerciseSpec) -> Option<f64> {
    let id = spec.primary_landmark;
    let lm = match frame.get(id) {
        Some(lm) => *lm,
        None => {
            let (l, r) = role_sources(id)?;
            match (frame.get(l), frame.get(r)) {
                (Some(a), Some(b)) => {
                    if a.visibility >= b.visibility {
                        *a
                    } else {
                        *b
                    }
                }
                (Some(a), None) | (None, Some(a)) => *a,
                (None, None) => return None,
            }
        }
    };
    Some(spec.apex.signal_sign() * lm.position[1])
}

/// Counting signal of a whole series.
pub fn counting_signal(series: &LandmarkSeries, spec: &ExerciseSpec) -> Result<Vec<f64>> {
    series
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            frame_signal(f, spec).ok_or_else(|| {
                Error::input(format!("frame {i}: primary landmark {} absent", spec.primary_landmark))
            })
        })
        .collect()
}

/// Tuning of the streaming segmenter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Absolute prominence floor, signal units. Guards against noise peaks
    /// while fewer than a handful of reps have been seen.
    pub min_prominence: f64,
    /// Frames after the trough with no lower sample that confirm a rep end
    /// even without a new ascent.
    pub settle_frames: usize,
    /// Rise above the trough, as a fraction of the running cutoff, that
    /// confirms a new ascent.
    pub rise_fraction: f64,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            min_prominence: 0.02,
            settle_frames: 10,
            rise_fraction: 0.25,
        }
    }
}

/// A rep recognized by [`OnlineSegmenter`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepEvent {
    pub rep_index: usize,
    pub start_frame: usize,
    pub end_frame: usize,
    /// Frame whose arrival made the rep decidable.
    pub detected_frame: usize,
    /// Seconds from the rep's end frame to its recognition.
    pub detection_lag: f64,
}

/// Streaming rep segmenter. Feed frames in order; a rep is reported as soon
/// as the signal has fallen from its apex by the running cutoff and either
/// starts rising again or stays settled near the trough.
#[derive(Debug, Clone)]
pub struct OnlineSegmenter {
    spec: ExerciseSpec,
    config: OnlineConfig,
    frames: LandmarkSeries,
    signal: Vec<f64>,
    last_end: Option<usize>,
    emitted: usize,
}

impl OnlineSegmenter {
    pub fn new(spec: &ExerciseSpec, config: OnlineConfig) -> Self {
        OnlineSegmenter {
            spec: spec.clone(),
            config,
            frames: LandmarkSeries::new(0.0, "stream"),
            signal: Vec::new(),
            last_end: None,
            emitted: 0,
        }
    }

    /// Frames consumed so far.
    pub fn frames(&self) -> &LandmarkSeries {
        &self.frames
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    /// Consumes one frame and reports the rep it completes, if any.
    pub fn push(&mut self, frame: LandmarkFrame) -> Result<Option<RepEvent>> {
        let value = frame_signal(&frame, &self.spec).ok_or_else(|| {
            Error::input(format!(
                "frame {}: primary landmark {} absent",
                self.signal.len(),
                self.spec.primary_landmark
            ))
        })?;
        self.frames.frames.push(frame);
        self.signal.push(value);
        Ok(self.decide(false))
    }

    /// Ends the stream. A rep whose descent is already complete is reported;
    /// a rep cut off before its descent is dropped.
    pub fn finish(&mut self) -> Option<RepEvent> {
        self.decide(true)
    }

    fn decide(&mut self, at_end: bool) -> Option<RepEvent> {
        let peaks = find_peaks(&self.signal);
        if peaks.len() < 2 && !at_end {
            return None;
        }
        let prominences: Vec<f64> = peaks.iter().map(|p| p.prominence).collect();
        let cutoff = population_std(&prominences);
        let threshold = cutoff.max(self.config.min_prominence);
        let after = self.last_end.map_or(0, |e| e + 1);
        let cand = peaks
            .iter()
            .find(|p| p.index >= after && p.prominence >= threshold)?;

        let last = self.signal.len() - 1;
        let trough = argmin(&self.signal, cand.index, last);
        if cand.height - self.signal[trough] < threshold || trough == cand.index {
            return None;
        }
        let rise = self.signal[last] - self.signal[trough];
        let settled = last - trough >= self.config.settle_frames;
        if !(at_end || rise >= self.config.rise_fraction * threshold || settled) {
            return None;
        }
        let start = match self.last_end {
            Some(e) => e,
            None => argmin(&self.signal, 0, cand.index),
        };
        self.last_end = Some(trough);
        let event = RepEvent {
            rep_index: self.emitted,
            start_frame: start,
            end_frame: trough,
            detected_frame: last,
            detection_lag: (self.frames.frames[last].timestamp - self.frames.frames[trough].timestamp)
                .max(0.0),
        };
        self.emitted += 1;
        Some(event)
    }
}
