//! Raw landmarks to normalized 2D rep trajectories: role resolution, facing
//! normalization, LOWESS smoothing, quality gating, min-max scaling and
//! velocity estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, LandmarkId, LandmarkSeries, RepSegment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    /// Fraction of points in each local fit, in (0, 1].
    pub lowess_fraction: f64,
    /// Bisquare robustness iterations, at most 5.
    pub lowess_iterations: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            lowess_fraction: 0.1,
            lowess_iterations: 2,
        }
    }
}

impl SmoothingConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.lowess_fraction > 0.0 && self.lowess_fraction <= 1.0) {
            return Err(Error::config(format!(
                "lowess_fraction {} outside (0, 1]",
                self.lowess_fraction
            )));
        }
        if self.lowess_iterations > 5 {
            return Err(Error::config(format!(
                "lowess_iterations {} exceeds 5",
                self.lowess_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityGate {
    /// Minimum mean visibility per landmark over a rep, in [0, 1].
    pub min_visibility: f64,
    /// Maximum |raw - smoothed| over a rep, normalized image units.
    pub max_residual: f64,
}

impl Default for QualityGate {
    fn default() -> Self {
        QualityGate {
            min_visibility: 0.5,
            max_residual: 0.05,
        }
    }
}

impl QualityGate {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_visibility) {
            return Err(Error::config("min_visibility outside [0, 1]"));
        }
        if !(self.max_residual > 0.0) {
            return Err(Error::config("max_residual must be positive"));
        }
        Ok(())
    }
}

fn mean_of(series: &LandmarkSeries, id: LandmarkId, f: impl Fn(&crate::model::Landmark) -> f64) -> Option<f64> {
    if !series.has_landmark(id) {
        return None;
    }
    let sum: f64 = series.frames.iter().map(|fr| f(&fr.landmarks[&id])).sum();
    Some(sum / series.len() as f64)
}

/// Fills in view-dependent role landmarks (`shoulder`, `front_knee`, ...)
/// that `spec` needs but `series` lacks, from the anatomical landmarks.
///
/// The camera-facing side is the one with the higher mean visibility over
/// shoulder, hip and knee (left on ties). The back leg of a split stance is
/// the one whose knee sits lower in the image on average.
pub fn resolve_roles(series: &LandmarkSeries, spec: &ExerciseSpec) -> Result<LandmarkSeries> {
    use LandmarkId::*;
    let missing: Vec<LandmarkId> = spec
        .landmarks
        .iter()
        .copied()
        .filter(|id| id.is_role() && !series.has_landmark(*id))
        .collect();
    if missing.is_empty() || series.is_empty() {
        return Ok(series.clone());
    }

    let side_score = |ids: [LandmarkId; 3]| -> f64 {
        ids.iter()
            .filter_map(|&id| mean_of(series, id, |l| l.visibility))
            .sum()
    };
    let left = side_score([LeftShoulder, LeftHip, LeftKnee]) >= side_score([RightShoulder, RightHip, RightKnee]);
    let side = |l: LandmarkId, r: LandmarkId| if left { l } else { r };

    let left_back = match (mean_of(series, LeftKnee, |l| l.position[1]), mean_of(series, RightKnee, |l| l.position[1])) {
        (Some(a), Some(b)) => a > b,
        _ => false,
    };
    let leg = |back: bool, l: LandmarkId, r: LandmarkId| if back == left_back { l } else { r };

    let mut out = series.clone();
    for role in missing {
        let candidates: Vec<LandmarkId> = match role {
            Shoulder => vec![side(LeftShoulder, RightShoulder)],
            Hip => vec![side(LeftHip, RightHip)],
            Knee => vec![side(LeftKnee, RightKnee)],
            Hand => vec![side(LeftHand, RightHand), side(LeftWrist, RightWrist)],
            Toe => vec![side(LeftToe, RightToe), side(LeftAnkle, RightAnkle)],
            FrontKnee => vec![leg(false, LeftKnee, RightKnee)],
            BackKnee => vec![leg(true, LeftKnee, RightKnee)],
            BackToe => vec![leg(true, LeftToe, RightToe), leg(true, LeftAnkle, RightAnkle)],
            FrontHeel => vec![leg(false, LeftHeel, RightHeel), leg(false, LeftAnkle, RightAnkle)],
            other => return Err(Error::config(format!("{other} is not a role landmark"))),
        };
        let source = candidates
            .into_iter()
            .find(|&c| series.has_landmark(c))
            .ok_or_else(|| Error::config(format!("cannot resolve {role}: source landmarks absent")))?;
        for frame in &mut out.frames {
            let lm = frame.landmarks[&source];
            frame.landmarks.insert(role, lm);
        }
    }
    Ok(out)
}

/// Landmark pair whose mean x ordering decides facing: hips when present,
/// else shoulders, else the preset's own indicator.
pub fn facing_indicator(series: &LandmarkSeries, spec: &ExerciseSpec) -> Result<(LandmarkId, LandmarkId)> {
    use LandmarkId::*;
    [(LeftHip, RightHip), (LeftShoulder, RightShoulder), spec.facing_pair]
        .into_iter()
        .find(|&(a, b)| series.has_landmark(a) && series.has_landmark(b))
        .ok_or_else(|| Error::config("facing indicator landmarks absent"))
}

/// Mirrors `series` (x -> 1 - x) unless the forward indicator's mean x is
/// already at most its counterpart's.
pub fn normalize_facing(series: &LandmarkSeries, spec: &ExerciseSpec) -> Result<LandmarkSeries> {
    if series.is_empty() {
        return Ok(series.clone());
    }
    let (fwd, back) = facing_indicator(series, spec)?;
    let mx = |id| mean_of(series, id, |l| l.position[0]).expect("indicator present");
    let mut out = series.clone();
    if mx(fwd) > mx(back) {
        for frame in &mut out.frames {
            for lm in frame.landmarks.values_mut() {
                lm.position[0] = 1.0 - lm.position[0];
            }
        }
    }
    Ok(out)
}

/// LOWESS over equally spaced samples: each output is a tricube-weighted
/// linear fit over the nearest `ceil(fraction * n)` points, followed by
/// `iterations` bisquare robustness passes.
pub fn lowess_smooth(values: &[f64], config: &SmoothingConfig) -> Result<Vec<f64>> {
    config.check()?;
    let n = values.len();
    if n < 3 {
        return Err(Error::input(format!("LOWESS needs at least 3 points, got {n}")));
    }
    let r = ((config.lowess_fraction * n as f64).ceil() as usize).clamp(2, n);
    let mut robust = vec![1.0; n];
    let mut fitted = vec![0.0; n];
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    for pass in 0..=config.lowess_iterations {
        let mut lo = 0usize;
        for i in 0..n {
            while lo + r < n && (lo + r - i) < (i - lo) {
                lo += 1;
            }
            let hi = lo + r - 1;
            let h = (i - lo).max(hi - i) as f64;
            fitted[i] = local_fit(values, &robust, i, lo, hi, h);
        }
        if pass == config.lowess_iterations {
            break;
        }
        let mut abs_res: Vec<f64> = values.iter().zip(&fitted).map(|(y, f)| (y - f).abs()).collect();
        let s = median(&mut abs_res);
        if s <= 1e-12 * (1.0 + scale) {
            break;
        }
        for i in 0..n {
            let u = (values[i] - fitted[i]) / (6.0 * s);
            robust[i] = if u.abs() < 1.0 { (1.0 - u * u).powi(2) } else { 0.0 };
        }
    }
    Ok(fitted)
}

fn local_fit(values: &[f64], robust: &[f64], i: usize, lo: usize, hi: usize, h: f64) -> f64 {
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let mut w = Vec::with_capacity(hi - lo + 1);
    for j in lo..=hi {
        let d = (j as f64 - i as f64).abs() / h;
        let t = if d < 1.0 { (1.0 - d * d * d).powi(3) } else { 0.0 };
        let wj = t * robust[j];
        w.push(wj);
        sw += wj;
        sx += wj * j as f64;
        sy += wj * (values[j] - values[i]);
    }
    if sw <= 0.0 {
        return values[i];
    }
    // centred on values[i] so that flat stretches come back unchanged
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (k, j) in (lo..=hi).enumerate() {
        let dx = j as f64 - mx;
        sxx += w[k] * dx * dx;
        sxy += w[k] * dx * (values[j] - values[i] - my);
    }
    if sxx <= 1e-12 * sw {
        return values[i] + my;
    }
    values[i] + my + sxy / sxx * (i as f64 - mx)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Maps every axis of `segment` to [0, 1] using the min and max over all
/// landmarks and frames of the rep. A flat axis maps to 0.5.
pub fn minmax_normalize(segment: &RepSegment) -> RepSegment {
    let mut out = segment.clone();
    for axis in 0..2 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in segment.trajectories.iter().flatten() {
            lo = lo.min(p[axis]);
            hi = hi.max(p[axis]);
        }
        let span = hi - lo;
        for p in out.trajectories.iter_mut().flatten() {
            p[axis] = if span > 0.0 { ((p[axis] - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
        }
    }
    out
}

/// Backward differences with a zero first velocity.
pub fn estimate_velocity(trajectory: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut v = Vec::with_capacity(trajectory.len());
    if let Some(_) = trajectory.first() {
        v.push([0.0, 0.0]);
    }
    for w in trajectory.windows(2) {
        v.push([w[1][0] - w[0][0], w[1][1] - w[0][1]]);
    }
    v
}

/// Outcome of the per-rep quality gate.
#[derive(Debug, Clone, PartialEq)]
pub enum GateDecision {
    Accept,
    Reject { landmark: LandmarkId, reason: String },
}

impl GateDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, GateDecision::Accept)
    }
}

/// Rejects a rep whose landmarks are poorly visible or whose raw track
/// departs from its LOWESS fit by more than `gate.max_residual`. Role
/// landmarks are resolved on the rep slice first.
pub fn gate_rep(
    segment: &RepSegment,
    series: &LandmarkSeries,
    spec: &ExerciseSpec,
    gate: &QualityGate,
    smoothing: &SmoothingConfig,
) -> Result<GateDecision> {
    if segment.end_frame >= series.len() || segment.start_frame >= segment.end_frame {
        return Err(Error::input(format!(
            "rep {} frames {}..={} outside series of {} frames",
            segment.rep_index,
            segment.start_frame,
            segment.end_frame,
            series.len()
        )));
    }
    let slice = resolve_roles(&series.slice(segment.start_frame, segment.end_frame), spec)?;
    let frames = &slice.frames[..];
    for &id in &segment.landmarks {
        let mut vis = 0.0;
        for f in frames {
            match f.get(id) {
                Some(l) => vis += l.visibility,
                None => {
                    return Ok(GateDecision::Reject {
                        landmark: id,
                        reason: format!("{id} missing"),
                    })
                }
            }
        }
        let mean = vis / frames.len() as f64;
        if mean < gate.min_visibility {
            return Ok(GateDecision::Reject {
                landmark: id,
                reason: format!("{id} mean visibility {mean:.3} below {}", gate.min_visibility),
            });
        }
    }
    if frames.len() < 3 {
        return Ok(GateDecision::Accept);
    }
    for &id in &segment.landmarks {
        for axis in 0..2 {
            let raw: Vec<f64> = frames.iter().map(|f| f.landmarks[&id].position[axis]).collect();
            let smooth = lowess_smooth(&raw, smoothing)?;
            let worst = raw
                .iter()
                .zip(&smooth)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if worst > gate.max_residual {
                return Ok(GateDecision::Reject {
                    landmark: id,
                    reason: format!(
                        "{id} smoothing residual {worst:.3} exceeds {}",
                        gate.max_residual
                    ),
                });
            }
        }
    }
    Ok(GateDecision::Accept)
}

/// Builds the normalized segment for frames `start..=end` of `series`:
/// role resolution and facing normalization on the rep slice, z dropped,
/// per-axis LOWESS, then joint min-max scaling.
pub fn build_segment(
    series: &LandmarkSeries,
    spec: &ExerciseSpec,
    rep_index: usize,
    start: usize,
    end: usize,
    smoothing: &SmoothingConfig,
) -> Result<RepSegment> {
    if start >= end || end >= series.len() {
        return Err(Error::input(format!(
            "rep {rep_index}: frames {start}..={end} invalid for series of {} frames",
            series.len()
        )));
    }
    let slice = resolve_roles(&series.slice(start, end), spec)?;
    let slice = normalize_facing(&slice, spec)?;
    let mut trajectories = Vec::with_capacity(spec.landmarks.len());
    for &id in &spec.landmarks {
        let track = slice
            .track(id)
            .ok_or_else(|| Error::input(format!("rep {rep_index}: landmark {id} missing")))?;
        let mut axes = [Vec::new(), Vec::new()];
        for (axis, out) in axes.iter_mut().enumerate() {
            let raw: Vec<f64> = track.iter().map(|p| p[axis]).collect();
            *out = if raw.len() >= 3 { lowess_smooth(&raw, smoothing)? } else { raw };
        }
        trajectories.push(axes[0].iter().zip(&axes[1]).map(|(&x, &y)| [x, y]).collect());
    }
    let segment = RepSegment {
        rep_index,
        start_frame: start,
        end_frame: end,
        landmarks: spec.landmarks.clone(),
        trajectories,
        label: None,
    };
    Ok(minmax_normalize(&segment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{exercise_preset, Exercise, Landmark, LandmarkFrame};

    fn cfg(f: f64, it: usize) -> SmoothingConfig {
        SmoothingConfig {
            lowess_fraction: f,
            lowess_iterations: it,
        }
    }

    #[test]
    fn lowess_reproduces_lines_and_constants() {
        let line: Vec<f64> = (0..40).map(|t| 2.0 * t as f64 + 1.0).collect();
        let out = lowess_smooth(&line, &cfg(0.2, 2)).unwrap();
        for (a, b) in line.iter().zip(&out) {
            assert!((a - b).abs() < 1e-9);
        }
        let flat = vec![0.37; 25];
        assert_eq!(lowess_smooth(&flat, &cfg(0.1, 2)).unwrap(), flat);
    }

    #[test]
    fn lowess_rejects_short_input() {
        assert!(matches!(lowess_smooth(&[1.0, 2.0], &cfg(0.5, 0)), Err(Error::Input(_))));
    }

    #[test]
    fn minmax_maps_affinely() {
        let seg = RepSegment {
            rep_index: 0,
            start_frame: 0,
            end_frame: 2,
            landmarks: vec![LandmarkId::Nose],
            trajectories: vec![vec![[0.2, 0.3], [0.4, 0.3], [0.6, 0.3]]],
            label: None,
        };
        let n = minmax_normalize(&seg);
        assert!((n.trajectories[0][1][0] - 0.5).abs() < 1e-12);
        assert_eq!(n.trajectories[0][1][1], 0.5);
        assert_eq!(n.trajectories[0][0], [0.0, 0.5]);
        assert_eq!(minmax_normalize(&n), n);
    }

    #[test]
    fn velocity_of_ramp() {
        let p: Vec<[f64; 2]> = (0..5).map(|t| [t as f64 * 0.1, 0.0]).collect();
        let v = estimate_velocity(&p);
        assert_eq!(v[0], [0.0, 0.0]);
        for vi in &v[1..] {
            assert!((vi[0] - 0.1).abs() < 1e-12);
        }
        assert!(estimate_velocity(&[]).is_empty());
    }

    fn squat_series(n: usize, vis: f64) -> LandmarkSeries {
        let spec = exercise_preset(Exercise::Squats);
        let mut s = LandmarkSeries::new(30.0, "t");
        for t in 0..n {
            let mut f = LandmarkFrame::new(t as f64 / 30.0);
            for (i, &id) in spec.landmarks.iter().enumerate() {
                let y = 0.5 + 0.1 * (t as f64 * 0.2).sin();
                f.landmarks.insert(id, Landmark::new(0.3 + 0.05 * i as f64, y, 0.0, vis));
            }
            s.frames.push(f);
        }
        s
    }

    #[test]
    fn gate_accepts_clean_and_rejects_invisible() {
        let spec = exercise_preset(Exercise::Squats);
        let mut s = squat_series(40, 1.0);
        let seg = build_segment(&s, spec, 0, 0, 39, &SmoothingConfig::default()).unwrap();
        let gate = QualityGate::default();
        let sm = SmoothingConfig::default();
        assert!(gate_rep(&seg, &s, spec, &gate, &sm).unwrap().is_accept());
        for f in &mut s.frames {
            f.landmarks.get_mut(&LandmarkId::RightKnee).unwrap().visibility = 0.0;
        }
        match gate_rep(&seg, &s, spec, &gate, &sm).unwrap() {
            GateDecision::Reject { landmark, .. } => assert_eq!(landmark, LandmarkId::RightKnee),
            GateDecision::Accept => panic!("expected rejection"),
        }
    }

    #[test]
    fn facing_is_idempotent_and_undoes_mirror() {
        let spec = exercise_preset(Exercise::Squats);
        let s = squat_series(20, 1.0);
        let once = normalize_facing(&s, spec).unwrap();
        assert_eq!(once, s);
        assert_eq!(normalize_facing(&once, spec).unwrap(), once);
        let mut mirrored = s.clone();
        for f in &mut mirrored.frames {
            for l in f.landmarks.values_mut() {
                l.position[0] = 1.0 - l.position[0];
            }
        }
        let back = normalize_facing(&mirrored, spec).unwrap();
        for (a, b) in back.frames.iter().zip(&s.frames) {
            for (la, lb) in a.landmarks.values().zip(b.landmarks.values()) {
                assert!((la.position[0] - lb.position[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn roles_resolve_from_visible_side() {
        let spec = exercise_preset(Exercise::Situps);
        let mut s = LandmarkSeries::new(30.0, "t");
        for t in 0..5 {
            let mut f = LandmarkFrame::new(t as f64);
            for (id, x, vis) in [
                (LandmarkId::Nose, 0.1, 1.0),
                (LandmarkId::LeftShoulder, 0.2, 0.2),
                (LandmarkId::RightShoulder, 0.21, 0.9),
                (LandmarkId::LeftHip, 0.4, 0.2),
                (LandmarkId::RightHip, 0.41, 0.9),
                (LandmarkId::LeftKnee, 0.6, 0.2),
                (LandmarkId::RightKnee, 0.61, 0.9),
            ] {
                f.landmarks.insert(id, Landmark::new(x, 0.5, 0.0, vis));
            }
            s.frames.push(f);
        }
        let r = resolve_roles(&s, spec).unwrap();
        assert_eq!(r.frames[0].landmarks[&LandmarkId::Shoulder].position[0], 0.21);
        assert_eq!(r.frames[0].landmarks[&LandmarkId::Knee].position[0], 0.61);
    }
}
