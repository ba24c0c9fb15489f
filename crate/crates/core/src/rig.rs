//! Synthetic articulated rig: deterministic exercise sessions with known rep
//! boundaries and form faults.
//!
//! Every preset gets a small template. Driver joints follow a sampled
//! sinusoid `(1 - cos(2 pi tau / F)) / 2` per rep, scaled by a per-rep depth
//! factor. Follower joints are damped point masses pulled by springs along
//! the skeleton edges (rest lengths from the standing pose) and towards
//! hidden world anchors:
//!
//! ```text
//! v[t+1] = (1 - c) v[t] + sum_j k (|p_j - p_i| - L_ij) (p_j - p_i) / |p_j - p_i|
//! p[t+1] = p[t] + v[t+1]
//! ```
//!
//! so a follower's next velocity is a function of its pairwise distances.
//! At every rep start the followers are displaced at random and released at
//! rest, so each rep opens with a different relaxation transient.
//! Faults either offset observed joints in proportion to the rep phase or
//! change template parameters; both leave the random draws untouched, so a
//! faulty session differs from the correct one of the same seed only by the
//! fault itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassLabel, Exercise, ExerciseSpec, Landmark, LandmarkFrame, LandmarkId, LandmarkSeries};

/// Spring stiffness per edge or anchor.
const STIFFNESS: f64 = 0.25;
/// Velocity damping per frame.
const DAMPING: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigConfig {
    pub exercise: Exercise,
    pub reps: usize,
    pub frames_per_rep: usize,
    /// Class id of the fault to inject; `None` for correct form.
    pub fault_mode: Option<u8>,
    /// In [0, 1]; zero exactly when `fault_mode` is `None`.
    pub fault_severity: f64,
    /// Standard deviation of Gaussian jitter on x and y, normalized units.
    pub noise_std: f64,
    /// Relative spread of the per-rep depth factor.
    pub depth_jitter: f64,
    /// Standard deviation of the follower displacement applied at each rep
    /// start, normalized units; draws are clamped to two deviations.
    pub posture_jitter: f64,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for RigConfig {
    fn default() -> Self {
        RigConfig {
            exercise: Exercise::Squats,
            reps: 8,
            frames_per_rep: 40,
            fault_mode: None,
            fault_severity: 0.0,
            noise_std: 0.002,
            depth_jitter: 0.15,
            posture_jitter: 0.015,
            frame_rate: 30.0,
            seed: 0,
        }
    }
}

impl RigConfig {
    pub fn check(&self, spec: &ExerciseSpec) -> Result<()> {
        if self.exercise != spec.exercise {
            return Err(Error::config(format!(
                "rig configured for {} but spec is {}",
                self.exercise, spec.exercise
            )));
        }
        if self.reps == 0 {
            return Err(Error::config("reps must be at least 1"));
        }
        if self.frames_per_rep < 8 {
            return Err(Error::config("frames_per_rep must be at least 8"));
        }
        if !(0.0..=1.0).contains(&self.fault_severity) {
            return Err(Error::config("fault_severity outside [0, 1]"));
        }
        match self.fault_mode {
            None if self.fault_severity != 0.0 => {
                return Err(Error::config("fault_severity must be 0 without a fault_mode"))
            }
            Some(_) if self.fault_severity == 0.0 => {
                return Err(Error::config("fault_mode needs a positive fault_severity"))
            }
            Some(id) => match spec.class(id) {
                Some(c) if !c.is_correct() => {}
                _ => {
                    return Err(Error::config(format!(
                        "fault mode {id} is not a fault class of {}",
                        spec.exercise
                    )))
                }
            },
            None => {}
        }
        if !(self.noise_std >= 0.0 && self.posture_jitter >= 0.0) || !(0.0..1.0).contains(&self.depth_jitter) {
            return Err(Error::config(
                "noise_std and posture_jitter must be >= 0 and depth_jitter in [0, 1)",
            ));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::config("frame_rate must be positive"));
        }
        Ok(())
    }

    pub fn label<'a>(&self, spec: &'a ExerciseSpec) -> &'a ClassLabel {
        match self.fault_mode {
            Some(id) => spec.class(id).expect("checked"),
            None => spec.correct_class(),
        }
    }
}

/// Ground truth accompanying a generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigTruth {
    pub exercise: Exercise,
    pub label: ClassLabel,
    /// Inclusive frame ranges; consecutive reps share their boundary frame.
    pub boundaries: Vec<(usize, usize)>,
    pub frames_per_rep: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigOutput {
    pub series: LandmarkSeries,
    pub truth: RigTruth,
}

#[derive(Debug, Clone, Copy)]
enum Motion {
    /// Moves by `depth * phase * dir`.
    Linear([f64; 2]),
    /// Rotates about another joint by `depth * phase * angle` radians,
    /// counter-clockwise on screen for positive angles.
    Rotate { pivot: usize, angle: f64 },
}

#[derive(Debug, Clone)]
enum Role {
    Driver { motion: Motion, gain: f64 },
    Follower,
}

/// Template in raw image coordinates: standing pose, roles, springs.
#[derive(Debug, Clone)]
struct Template {
    pose: Vec<[f64; 2]>,
    roles: Vec<Role>,
    /// (node, node) springs, rest length from the standing pose.
    springs: Vec<(usize, usize, f64)>,
    /// (node, world point, rest length).
    anchors: Vec<(usize, [f64; 2], f64)>,
    /// Observation offset per node: constant part and phase-proportional part.
    offsets: Vec<([f64; 2], [f64; 2])>,
    /// External force per node, scaled by the rep phase.
    loads: Vec<[f64; 2]>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Template {
    fn new(spec: &ExerciseSpec, pose: &[(LandmarkId, [f64; 2])]) -> Self {
        let idx = |id| spec.landmark_index(id).expect("template covers the preset");
        let mut p = vec![[0.0; 2]; spec.landmarks.len()];
        for &(id, xy) in pose {
            p[idx(id)] = xy;
        }
        let springs = spec
            .edges
            .iter()
            .map(|&(a, b)| (idx(a), idx(b), dist(p[idx(a)], p[idx(b)])))
            .collect();
        Template {
            roles: vec![Role::Follower; p.len()],
            offsets: vec![([0.0; 2], [0.0; 2]); p.len()],
            loads: vec![[0.0; 2]; p.len()],
            pose: p,
            springs,
            anchors: Vec::new(),
        }
    }

    fn drive(&mut self, spec: &ExerciseSpec, id: LandmarkId, motion: Motion) {
        self.roles[spec.landmark_index(id).unwrap()] = Role::Driver { motion, gain: 1.0 };
    }

    /// Anchors a follower to a world point at its rest distance.
    fn anchor(&mut self, spec: &ExerciseSpec, id: LandmarkId, point: [f64; 2]) {
        let i = spec.landmark_index(id).unwrap();
        self.anchors.push((i, point, dist(self.pose[i], point)));
    }

    fn offset(&mut self, spec: &ExerciseSpec, id: LandmarkId, constant: [f64; 2], phased: [f64; 2]) {
        let o = &mut self.offsets[spec.landmark_index(id).unwrap()];
        o.0 = [o.0[0] + constant[0], o.0[1] + constant[1]];
        o.1 = [o.1[0] + phased[0], o.1[1] + phased[1]];
    }

    fn load(&mut self, spec: &ExerciseSpec, id: LandmarkId, force: [f64; 2]) {
        let l = &mut self.loads[spec.landmark_index(id).unwrap()];
        *l = [l[0] + force[0], l[1] + force[1]];
    }

    fn scale_drive(&mut self, spec: &ExerciseSpec, id: LandmarkId, factor: f64) {
        if let Role::Driver { gain, .. } = &mut self.roles[spec.landmark_index(id).unwrap()] {
            *gain *= factor;
        }
    }

    /// Moves a joint's standing position without touching rest lengths.
    fn shift(&mut self, spec: &ExerciseSpec, id: LandmarkId, d: [f64; 2]) {
        let i = spec.landmark_index(id).unwrap();
        self.pose[i] = [self.pose[i][0] + d[0], self.pose[i][1] + d[1]];
    }

    fn shift_anchors(&mut self, spec: &ExerciseSpec, id: LandmarkId, d: [f64; 2]) {
        let i = spec.landmark_index(id).unwrap();
        for a in self.anchors.iter_mut().filter(|a| a.0 == i) {
            a.1 = [a.1[0] + d[0], a.1[1] + d[1]];
        }
    }
}

/// Sampled rep phase in [0, 1]: 0 at both rep boundaries, 1 at the apex.
pub fn rep_phase(tau: usize, frames_per_rep: usize) -> f64 {
    (1.0 - (2.0 * std::f64::consts::PI * tau as f64 / frames_per_rep as f64).cos()) / 2.0
}

/// Forward knee shift per unit severity for the squat "knees past toes"
/// fault, reached at the rep apex.
pub const KNEE_FORWARD_SHIFT: f64 = 0.10;

/// Inward force on each knee per unit severity for the squat "knees inward"
/// fault, reached at the rep apex. The knees yield through their springs, so
/// the collapse lags the rep phase.
pub const KNEE_INWARD_LOAD: f64 = 0.05;

fn template(spec: &ExerciseSpec, fault: Option<u8>, sev: f64) -> Template {
    use LandmarkId::*;
    let s = spec;
    match spec.exercise {
        Exercise::Squats => {
            let mut t = Template::new(
                s,
                &[
                    (Nose, [0.50, 0.22]),
                    (LeftHip, [0.45, 0.50]),
                    (RightHip, [0.55, 0.50]),
                    (LeftKnee, [0.435, 0.68]),
                    (RightKnee, [0.565, 0.68]),
                ],
            );
            t.drive(s, LeftHip, Motion::Linear([0.0, 0.14]));
            t.drive(s, RightHip, Motion::Linear([0.0, 0.14]));
            t.anchor(s, LeftKnee, [0.445, 0.86]);
            t.anchor(s, RightKnee, [0.555, 0.86]);
            match fault {
                Some(1) => {
                    let d = sev * KNEE_FORWARD_SHIFT;
                    t.offset(s, LeftKnee, [0.0; 2], [d, 0.0]);
                    t.offset(s, RightKnee, [0.0; 2], [d, 0.0]);
                }
                Some(2) => {
                    t.load(s, LeftKnee, [sev * KNEE_INWARD_LOAD, 0.0]);
                    t.load(s, RightKnee, [-sev * KNEE_INWARD_LOAD, 0.0]);
                }
                Some(3) => {
                    t.shift(s, LeftHip, [-sev * 0.04, 0.0]);
                    t.shift(s, RightHip, [sev * 0.04, 0.0]);
                    t.shift_anchors(s, LeftKnee, [-sev * 0.08, 0.0]);
                    t.shift_anchors(s, RightKnee, [sev * 0.08, 0.0]);
                }
                _ => {}
            }
            t
        }
        Exercise::Situps => {
            let mut t = Template::new(
                s,
                &[
                    (Nose, [0.17, 0.69]),
                    (Shoulder, [0.24, 0.74]),
                    (Hip, [0.50, 0.76]),
                    (Knee, [0.63, 0.62]),
                ],
            );
            t.drive(s, Shoulder, Motion::Rotate { pivot: 2, angle: -1.1 });
            t.anchor(s, Hip, [0.50, 0.80]);
            t.anchor(s, Knee, [0.76, 0.77]);
            if fault == Some(1) {
                t.scale_drive(s, Shoulder, 1.0 - 0.5 * sev);
            }
            t
        }
        Exercise::Pushups => {
            let mut t = Template::new(
                s,
                &[
                    (Shoulder, [0.30, 0.55]),
                    (Hand, [0.31, 0.75]),
                    (Hip, [0.55, 0.59]),
                    (Toe, [0.80, 0.74]),
                ],
            );
            t.drive(s, Shoulder, Motion::Linear([0.0, 0.12]));
            t.anchor(s, Hand, [0.31, 0.77]);
            t.anchor(s, Toe, [0.80, 0.76]);
            match fault {
                Some(1) => t.offset(s, Hip, [0.0; 2], [0.0, sev * 0.06]),
                Some(2) => t.scale_drive(s, Shoulder, 1.0 - 0.5 * sev),
                Some(3) => t.offset(s, Hip, [0.0, -sev * 0.04], [0.0, -sev * 0.03]),
                Some(4) => t.scale_drive(s, Shoulder, 1.0 + 0.5 * sev),
                _ => {}
            }
            t
        }
        Exercise::Lunges => {
            let mut t = Template::new(
                s,
                &[
                    (Shoulder, [0.46, 0.25]),
                    (Hip, [0.47, 0.50]),
                    (FrontKnee, [0.39, 0.67]),
                    (BackKnee, [0.57, 0.68]),
                    (BackToe, [0.67, 0.86]),
                    (FrontHeel, [0.36, 0.86]),
                ],
            );
            t.drive(s, Hip, Motion::Linear([0.0, 0.14]));
            t.anchor(s, FrontHeel, [0.36, 0.87]);
            t.anchor(s, BackToe, [0.67, 0.87]);
            match fault {
                Some(1) => t.offset(s, FrontKnee, [0.0; 2], [-sev * 0.08, 0.0]),
                Some(2) => {
                    t.shift_anchors(s, FrontHeel, [-sev * 0.06, 0.0]);
                    t.shift_anchors(s, BackToe, [sev * 0.06, 0.0]);
                }
                _ => {}
            }
            t
        }
        Exercise::ShoulderPress | Exercise::FrontRaise => {
            let press = spec.exercise == Exercise::ShoulderPress;
            let (lw, rw, lift) = if press {
                ([0.35, 0.30], [0.65, 0.30], [[0.04, -0.22], [-0.04, -0.22]])
            } else {
                ([0.40, 0.58], [0.60, 0.58], [[0.0, -0.24], [0.0, -0.24]])
            };
            let (le, re) = if press { ([0.33, 0.40], [0.67, 0.40]) } else { ([0.41, 0.46], [0.59, 0.46]) };
            let mut t = Template::new(
                s,
                &[
                    (LeftShoulder, [0.42, 0.34]),
                    (LeftElbow, le),
                    (LeftWrist, lw),
                    (RightShoulder, [0.58, 0.34]),
                    (RightElbow, re),
                    (RightWrist, rw),
                ],
            );
            t.drive(s, LeftWrist, Motion::Linear(lift[0]));
            t.drive(s, RightWrist, Motion::Linear(lift[1]));
            t.anchor(s, LeftShoulder, [0.42, 0.40]);
            t.anchor(s, RightShoulder, [0.58, 0.40]);
            match (press, fault) {
                (_, Some(1)) => {
                    t.scale_drive(s, LeftWrist, 1.0 - 0.4 * sev);
                    t.scale_drive(s, RightWrist, 1.0 - 0.4 * sev);
                }
                (_, Some(2)) => {
                    t.offset(s, LeftElbow, [0.0; 2], [-sev * 0.05, 0.0]);
                    t.offset(s, RightElbow, [0.0; 2], [sev * 0.05, 0.0]);
                }
                (false, Some(3)) => t.scale_drive(s, RightWrist, 1.0 - 0.4 * sev),
                _ => {}
            }
            t
        }
    }
}

/// Generates one session.
pub fn generate(cfg: &RigConfig, spec: &ExerciseSpec) -> Result<RigOutput> {
    cfg.check(spec)?;
    let fault = cfg.fault_mode;
    let tpl = template(spec, fault, cfg.fault_severity);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let depths: Vec<f64> = (0..cfg.reps)
        .map(|_| 1.0 + cfg.depth_jitter * rng.gen_range(-1.0..1.0))
        .collect();
    // follower displacement per rep and joint, drawn for drivers too so the
    // stream of draws does not depend on the template
    let unit = Normal::new(0.0, 1.0).expect("valid std");
    let k = tpl.pose.len();
    let postures: Vec<Vec<[f64; 2]>> = (0..cfg.reps)
        .map(|_| {
            (0..k)
                .map(|_| {
                    let mut d = || cfg.posture_jitter * f64::clamp(unit.sample(&mut rng), -2.0, 2.0);
                    [d(), d()]
                })
                .collect()
        })
        .collect();

    let f = cfg.frames_per_rep;
    let total = cfg.reps * f + 1;
    let mut pos = tpl.pose.clone();
    let mut vel = vec![[0.0; 2]; k];
    let mut series = LandmarkSeries::new(cfg.frame_rate, format!("rig:{}:seed={}", spec.exercise, cfg.seed));
    series.exercise = Some(spec.exercise);

    let mut prev_phase = 0.0;
    for t in 0..total {
        let rep = (t / f).min(cfg.reps - 1);
        let tau = t - rep * f;
        let phase = rep_phase(tau, f);
        if t > 0 {
            // followers integrate from the previous frame's positions
            let mut next = pos.clone();
            for i in 0..k {
                if let Role::Follower = tpl.roles[i] {
                    let mut force = [tpl.loads[i][0] * prev_phase, tpl.loads[i][1] * prev_phase];
                    let mut pull = |target: [f64; 2], rest: f64| {
                        let d = [target[0] - pos[i][0], target[1] - pos[i][1]];
                        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                        if len > 1e-12 {
                            let m = STIFFNESS * (len - rest) / len;
                            force[0] += m * d[0];
                            force[1] += m * d[1];
                        }
                    };
                    for &(a, b, rest) in &tpl.springs {
                        if a == i {
                            pull(pos[b], rest);
                        } else if b == i {
                            pull(pos[a], rest);
                        }
                    }
                    for &(n, point, rest) in &tpl.anchors {
                        if n == i {
                            pull(point, rest);
                        }
                    }
                    vel[i] = [
                        (1.0 - DAMPING) * vel[i][0] + force[0],
                        (1.0 - DAMPING) * vel[i][1] + force[1],
                    ];
                    next[i] = [pos[i][0] + vel[i][0], pos[i][1] + vel[i][1]];
                }
            }
            pos = next;
        }
        if tau == 0 && t < cfg.reps * f {
            for i in 0..k {
                if let Role::Follower = tpl.roles[i] {
                    pos[i] = [pos[i][0] + postures[rep][i][0], pos[i][1] + postures[rep][i][1]];
                    vel[i] = [0.0; 2];
                }
            }
        }
        // drivers are placed directly, pivots first
        for i in 0..k {
            if let Role::Driver { motion, gain } = tpl.roles[i] {
                let amount = depths[rep] * gain * phase;
                pos[i] = match motion {
                    Motion::Linear(d) => [tpl.pose[i][0] + amount * d[0], tpl.pose[i][1] + amount * d[1]],
                    Motion::Rotate { pivot, angle } => {
                        let c = pos[pivot];
                        let r = [tpl.pose[i][0] - tpl.pose[pivot][0], tpl.pose[i][1] - tpl.pose[pivot][1]];
                        // positive angle turns counter-clockwise on screen (y grows downwards)
                        let (sn, cs) = (angle * amount).sin_cos();
                        [c[0] + cs * r[0] + sn * r[1], c[1] - sn * r[0] + cs * r[1]]
                    }
                };
            }
        }
        let mut frame = LandmarkFrame::new(t as f64 / cfg.frame_rate);
        for (i, &id) in spec.landmarks.iter().enumerate() {
            let (c, ph) = tpl.offsets[i];
            let mut xy = [pos[i][0] + c[0] + ph[0] * phase, pos[i][1] + c[1] + ph[1] * phase];
            for v in &mut xy {
                *v += cfg.noise_std * unit.sample(&mut rng);
            }
            frame.landmarks.insert(id, Landmark::new(xy[0], xy[1], 0.0, 1.0));
        }
        series.frames.push(frame);
        prev_phase = phase;
    }

    let truth = RigTruth {
        exercise: spec.exercise,
        label: cfg.label(spec).clone(),
        boundaries: (0..cfg.reps).map(|r| (r * f, (r + 1) * f)).collect(),
        frames_per_rep: f,
        seed: cfg.seed,
    };
    Ok(RigOutput { series, truth })
}

/// A labeled collection of sessions for classifier experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub exercise: Exercise,
    /// Class ids to include; the correct class must be among them.
    pub classes: Vec<u8>,
    pub sessions_per_class: usize,
    pub reps_per_session: usize,
    pub frames_per_rep: usize,
    /// Fault severities are drawn uniformly from this range.
    pub severity: (f64, f64),
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            exercise: Exercise::Squats,
            classes: vec![0, 1, 2],
            sessions_per_class: 8,
            reps_per_session: 6,
            frames_per_rep: 40,
            severity: (0.6, 1.0),
            noise_std: 0.002,
            seed: 0,
        }
    }
}

/// Generates `sessions_per_class` sessions for every class in `cfg.classes`.
pub fn generate_dataset(cfg: &DatasetConfig, spec: &ExerciseSpec) -> Result<Vec<RigOutput>> {
    if !cfg.classes.iter().any(|&c| spec.class(c).is_some_and(ClassLabel::is_correct)) {
        return Err(Error::config("dataset classes must include the correct class"));
    }
    let (lo, hi) = cfg.severity;
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(Error::config("severity range must satisfy 0 < lo <= hi <= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for &class in &cfg.classes {
        let label = spec
            .class(class)
            .ok_or_else(|| Error::config(format!("{} has no class {class}", spec.exercise)))?;
        for _ in 0..cfg.sessions_per_class {
            let severity: f64 = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
            let rig = RigConfig {
                exercise: spec.exercise,
                reps: cfg.reps_per_session,
                frames_per_rep: cfg.frames_per_rep,
                fault_mode: (!label.is_correct()).then_some(class),
                fault_severity: if label.is_correct() { 0.0 } else { severity },
                noise_std: cfg.noise_std,
                seed: rng.gen(),
                ..RigConfig::default()
            };
            out.push(generate(&rig, spec)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::exercise_preset;
    use crate::segment::{counting_signal, segment_reps};

    #[test]
    fn every_preset_and_fault_generates() {
        for &e in &Exercise::ALL {
            let spec = exercise_preset(e);
            for class in &spec.classes {
                let cfg = RigConfig {
                    exercise: e,
                    reps: 3,
                    fault_mode: (!class.is_correct()).then_some(class.id),
                    fault_severity: if class.is_correct() { 0.0 } else { 0.8 },
                    ..RigConfig::default()
                };
                let out = generate(&cfg, spec).unwrap();
                assert_eq!(out.series.len(), 3 * 40 + 1);
                assert!(crate::model::validate_series(&out.series, spec).is_empty());
                for f in &out.series.frames {
                    for l in f.landmarks.values() {
                        assert!(l.position.iter().all(|v| v.is_finite() && (-0.5..1.5).contains(v)), "{e}");
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_counting_signal_recovers_boundaries() {
        for &e in &Exercise::ALL {
            let spec = exercise_preset(e);
            let cfg = RigConfig {
                exercise: e,
                reps: 5,
                noise_std: 0.0,
                ..RigConfig::default()
            };
            let out = generate(&cfg, spec).unwrap();
            let b = segment_reps(&counting_signal(&out.series, spec).unwrap());
            assert_eq!(b.reps.len(), 5, "{e}");
            for (got, want) in b.reps.iter().zip(&out.truth.boundaries) {
                assert!(got.0.abs_diff(want.0) <= 2 && got.1.abs_diff(want.1) <= 2, "{e}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn incompatible_fault_is_config_error() {
        let spec = exercise_preset(Exercise::Situps);
        let cfg = RigConfig {
            exercise: Exercise::Situps,
            fault_mode: Some(3),
            fault_severity: 0.5,
            ..RigConfig::default()
        };
        assert!(matches!(generate(&cfg, spec), Err(Error::Config(_))));
    }

    #[test]
    fn knee_fault_margin_is_closed_form() {
        let spec = exercise_preset(Exercise::Squats);
        let base = RigConfig {
            reps: 2,
            noise_std: 0.0,
            ..RigConfig::default()
        };
        let faulty = RigConfig {
            fault_mode: Some(1),
            fault_severity: 0.5,
            ..base.clone()
        };
        let a = generate(&base, spec).unwrap().series;
        let b = generate(&faulty, spec).unwrap().series;
        let knee = LandmarkId::LeftKnee;
        let margin = a
            .frames
            .iter()
            .zip(&b.frames)
            .map(|(x, y)| y.landmarks[&knee].position[0] - x.landmarks[&knee].position[0])
            .fold(f64::MIN, f64::max);
        assert!((margin - 0.5 * KNEE_FORWARD_SHIFT).abs() < 1e-12);
    }
}
