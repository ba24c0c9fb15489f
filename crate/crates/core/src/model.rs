//! Canonical domain types: landmark identifiers, landmark frames and series,
//! exercise presets with their skeleton edges and recommendation catalogs,
//! repetition segments, and series validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! landmarks {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Named body landmark.
        ///
        /// The first 25 variants are the anatomical canonical set that pose
        /// extractors map onto. The remaining variants are view-dependent
        /// roles (`shoulder` is the camera-facing shoulder of a side view,
        /// `front_knee` the knee of the leading leg, ...) that side-view
        /// exercise presets are written in.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum LandmarkId {
            $($variant),+
        }

        impl LandmarkId {
            /// Every landmark in ordinal order.
            pub const ALL: &'static [LandmarkId] = &[$(LandmarkId::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(LandmarkId::$variant => $name),+
                }
            }
        }
    };
}

landmarks! {
    Nose => "nose",
    Neck => "neck",
    LeftEye => "left_eye",
    RightEye => "right_eye",
    LeftEar => "left_ear",
    RightEar => "right_ear",
    LeftShoulder => "left_shoulder",
    RightShoulder => "right_shoulder",
    LeftElbow => "left_elbow",
    RightElbow => "right_elbow",
    LeftWrist => "left_wrist",
    RightWrist => "right_wrist",
    LeftHand => "left_hand",
    RightHand => "right_hand",
    MidHip => "mid_hip",
    LeftHip => "left_hip",
    RightHip => "right_hip",
    LeftKnee => "left_knee",
    RightKnee => "right_knee",
    LeftAnkle => "left_ankle",
    RightAnkle => "right_ankle",
    LeftHeel => "left_heel",
    RightHeel => "right_heel",
    LeftToe => "left_toe",
    RightToe => "right_toe",
    Shoulder => "shoulder",
    Hip => "hip",
    Knee => "knee",
    Hand => "hand",
    Toe => "toe",
    FrontKnee => "front_knee",
    BackKnee => "back_knee",
    BackToe => "back_toe",
    FrontHeel => "front_heel",
}

impl LandmarkId {
    /// Size of the anatomical canonical set.
    pub const CANONICAL_COUNT: usize = 25;

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|id| id.name() == name)
    }

    /// The anatomical canonical landmarks.
    pub fn canonical() -> &'static [LandmarkId] {
        &Self::ALL[..Self::CANONICAL_COUNT]
    }

    /// True for view-dependent role landmarks.
    pub fn is_role(self) -> bool {
        self.ordinal() >= Self::CANONICAL_COUNT
    }
}

impl fmt::Display for LandmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LandmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LandmarkId::from_name(s).ok_or_else(|| Error::config(format!("unknown landmark `{s}`")))
    }
}

/// A single landmark observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    /// (x, y, z) in normalized image units; y grows downwards.
    pub position: [f64; 3],
    pub visibility: f64,
}

impl Landmark {
    pub fn new(x: f64, y: f64, z: f64, visibility: f64) -> Self {
        Landmark {
            position: [x, y, z],
            visibility,
        }
    }
}

/// All landmarks observed at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkFrame {
    /// Seconds, monotonic within a series.
    pub timestamp: f64,
    pub landmarks: BTreeMap<LandmarkId, Landmark>,
}

impl LandmarkFrame {
    pub fn new(timestamp: f64) -> Self {
        LandmarkFrame {
            timestamp,
            landmarks: BTreeMap::new(),
        }
    }

    pub fn with(mut self, id: LandmarkId, landmark: Landmark) -> Self {
        self.landmarks.insert(id, landmark);
        self
    }

    pub fn get(&self, id: LandmarkId) -> Option<&Landmark> {
        self.landmarks.get(&id)
    }
}

/// Time-ordered landmark observations of one session.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSeries {
    pub frames: Vec<LandmarkFrame>,
    /// Nominal sampling rate in Hz.
    pub frame_rate: f64,
    /// Free-text provenance.
    pub source: String,
    pub exercise: Option<Exercise>,
}

impl LandmarkSeries {
    pub fn new(frame_rate: f64, source: impl Into<String>) -> Self {
        LandmarkSeries {
            frames: Vec::new(),
            frame_rate,
            source: source.into(),
            exercise: None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Landmark set of the first frame, in ordinal order.
    pub fn landmark_ids(&self) -> Vec<LandmarkId> {
        self.frames
            .first()
            .map(|f| f.landmarks.keys().copied().collect())
            .unwrap_or_default()
    }

    /// True when every frame carries `id`.
    pub fn has_landmark(&self, id: LandmarkId) -> bool {
        !self.frames.is_empty() && self.frames.iter().all(|f| f.landmarks.contains_key(&id))
    }

    /// Position track of one landmark, or `None` if any frame lacks it.
    pub fn track(&self, id: LandmarkId) -> Option<Vec<[f64; 3]>> {
        self.frames
            .iter()
            .map(|f| f.get(id).map(|l| l.position))
            .collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    /// Copy of frames `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> LandmarkSeries {
        LandmarkSeries {
            frames: self.frames[start..=end].to_vec(),
            frame_rate: self.frame_rate,
            source: self.source.clone(),
            exercise: self.exercise,
        }
    }
}

/// Supported exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exercise {
    Squats,
    Situps,
    Pushups,
    Lunges,
    ShoulderPress,
    FrontRaise,
}

impl Exercise {
    pub const ALL: [Exercise; 6] = [
        Exercise::Squats,
        Exercise::Situps,
        Exercise::Pushups,
        Exercise::Lunges,
        Exercise::ShoulderPress,
        Exercise::FrontRaise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Exercise::Squats => "squats",
            Exercise::Situps => "situps",
            Exercise::Pushups => "pushups",
            Exercise::Lunges => "lunges",
            Exercise::ShoulderPress => "shoulder_press",
            Exercise::FrontRaise => "front_raise",
        }
    }
}

impl fmt::Display for Exercise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Exercise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect();
        match key.as_str() {
            "squats" | "squat" => Ok(Exercise::Squats),
            "situps" | "situp" => Ok(Exercise::Situps),
            "pushups" | "pushup" => Ok(Exercise::Pushups),
            "lunges" | "lunge" => Ok(Exercise::Lunges),
            "shoulderpress" => Ok(Exercise::ShoulderPress),
            "frontraise" => Ok(Exercise::FrontRaise),
            _ => Err(Error::config(format!("unknown exercise `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    Correct,
    Fault,
}

/// One diagnosis class of an exercise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub id: u8,
    pub kind: ClassKind,
    /// Corrective recommendation; empty for the correct class.
    pub recommendation: String,
}

impl ClassLabel {
    pub fn correct(id: u8) -> Self {
        ClassLabel {
            id,
            kind: ClassKind::Correct,
            recommendation: String::new(),
        }
    }

    pub fn fault(id: u8, recommendation: impl Into<String>) -> Self {
        ClassLabel {
            id,
            kind: ClassKind::Fault,
            recommendation: recommendation.into(),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.kind == ClassKind::Correct
    }
}

/// Which way the primary landmark moves in image coordinates during the
/// working phase of a rep. Decides the sign of the rep-counting signal so
/// that its peaks mark rep apices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApexDirection {
    /// The landmark descends (image y grows) towards the apex.
    Down,
    /// The landmark rises (image y shrinks) towards the apex.
    Up,
}

impl ApexDirection {
    pub fn signal_sign(self) -> f64 {
        match self {
            ApexDirection::Down => 1.0,
            ApexDirection::Up => -1.0,
        }
    }
}

/// Fixed description of how one exercise is observed and diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseSpec {
    pub exercise: Exercise,
    /// Representative landmarks, in graph node order.
    pub landmarks: Vec<LandmarkId>,
    /// Natural joint connections, stored once per undirected pair.
    pub edges: Vec<(LandmarkId, LandmarkId)>,
    /// Landmark whose vertical displacement drives rep counting.
    pub primary_landmark: LandmarkId,
    pub apex: ApexDirection,
    /// Fallback facing indicator (forward landmark, counterpart) used when the
    /// series carries neither a hip nor a shoulder pair.
    pub facing_pair: (LandmarkId, LandmarkId),
    pub classes: Vec<ClassLabel>,
    /// Two stationary virtual nodes in normalized coordinates (top, bottom).
    pub reference_points: [[f64; 2]; 2],
}

pub const REFERENCE_POINTS: [[f64; 2]; 2] = [[0.5, 0.0], [0.5, 1.0]];

impl ExerciseSpec {
    pub fn landmark_index(&self, id: LandmarkId) -> Option<usize> {
        self.landmarks.iter().position(|&l| l == id)
    }

    pub fn class(&self, id: u8) -> Option<&ClassLabel> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn correct_class(&self) -> &ClassLabel {
        self.classes
            .iter()
            .find(|c| c.is_correct())
            .expect("presets always carry a correct class")
    }

    /// Fault class whose recommendation matches `text` exactly.
    pub fn class_by_recommendation(&self, text: &str) -> Option<&ClassLabel> {
        self.classes.iter().find(|c| c.recommendation == text)
    }

    /// Checks the structural invariants of a spec.
    pub fn check(&self) -> Result<()> {
        for (i, a) in self.landmarks.iter().enumerate() {
            if self.landmarks[i + 1..].contains(a) {
                return Err(Error::config(format!("{}: duplicate landmark {a}", self.exercise)));
            }
        }
        for &(a, b) in &self.edges {
            for end in [a, b] {
                if self.landmark_index(end).is_none() {
                    return Err(Error::config(format!(
                        "{}: edge endpoint {end} is not a representative landmark",
                        self.exercise
                    )));
                }
            }
        }
        if self.landmark_index(self.primary_landmark).is_none() {
            return Err(Error::config(format!(
                "{}: primary landmark {} is not representative",
                self.exercise, self.primary_landmark
            )));
        }
        let correct = self.classes.iter().filter(|c| c.is_correct()).count();
        if correct != 1 {
            return Err(Error::config(format!(
                "{}: expected exactly one correct class, found {correct}",
                self.exercise
            )));
        }
        for c in &self.classes {
            if c.is_correct() != c.recommendation.is_empty() {
                return Err(Error::config(format!(
                    "{}: class {} recommendation must be empty iff the class is correct",
                    self.exercise, c.id
                )));
            }
        }
        Ok(())
    }
}

/// Immutable preset for `exercise`.
pub fn exercise_preset(exercise: Exercise) -> &'static ExerciseSpec {
    static PRESETS: OnceLock<Vec<ExerciseSpec>> = OnceLock::new();
    let presets = PRESETS.get_or_init(|| Exercise::ALL.iter().map(|&e| build_preset(e)).collect());
    &presets[Exercise::ALL.iter().position(|&e| e == exercise).unwrap()]
}

/// Preset lookup by name; unknown names are a configuration error.
pub fn exercise_preset_by_name(name: &str) -> Result<&'static ExerciseSpec> {
    Ok(exercise_preset(name.parse()?))
}

fn build_preset(exercise: Exercise) -> ExerciseSpec {
    use LandmarkId::*;

    let (landmarks, edges, primary, apex, facing, faults): (
        Vec<LandmarkId>,
        Vec<(LandmarkId, LandmarkId)>,
        LandmarkId,
        ApexDirection,
        (LandmarkId, LandmarkId),
        &[&str],
    ) = match exercise {
        Exercise::Squats => (
            vec![Nose, LeftHip, RightHip, LeftKnee, RightKnee],
            vec![
                (Nose, LeftHip),
                (Nose, RightHip),
                (LeftHip, RightHip),
                (LeftHip, LeftKnee),
                (RightHip, RightKnee),
            ],
            LeftHip,
            ApexDirection::Down,
            (LeftHip, RightHip),
            &[
                "Keep your knees behind the toes",
                "Don't bend your knees inward",
                "Keep your Feet shoulder-width apart",
            ],
        ),
        Exercise::Situps => (
            vec![Nose, Shoulder, Hip, Knee],
            vec![(Nose, Shoulder), (Shoulder, Hip), (Hip, Knee)],
            Shoulder,
            ApexDirection::Up,
            (Shoulder, Knee),
            &["Your back should rise up completely"],
        ),
        Exercise::Pushups => (
            vec![Shoulder, Hand, Hip, Toe],
            vec![(Shoulder, Hand), (Shoulder, Hip), (Hip, Toe)],
            Shoulder,
            ApexDirection::Down,
            (Shoulder, Toe),
            &[
                "Keep your Knees-hips-Shoulders in a straight line",
                "Lower your chest to align it with hip",
                "Lower your hips",
                "Your chest should not touch the ground",
            ],
        ),
        Exercise::Lunges => (
            vec![Shoulder, Hip, FrontKnee, BackKnee, BackToe, FrontHeel],
            vec![
                (Shoulder, Hip),
                (Hip, FrontKnee),
                (Hip, BackKnee),
                (BackKnee, BackToe),
                (FrontKnee, FrontHeel),
            ],
            Hip,
            ApexDirection::Down,
            (FrontKnee, BackKnee),
            &[
                "Keep your knees behind the toes",
                "Keep your legs closer, they are too wide apart",
            ],
        ),
        Exercise::ShoulderPress => (
            upper_body_landmarks(),
            upper_body_edges(),
            LeftWrist,
            ApexDirection::Up,
            (LeftShoulder, RightShoulder),
            &[
                "Extend your arms fully overhead",
                "Keep your elbows directly under your wrists",
            ],
        ),
        Exercise::FrontRaise => (
            upper_body_landmarks(),
            upper_body_edges(),
            LeftWrist,
            ApexDirection::Up,
            (LeftShoulder, RightShoulder),
            &[
                "Raise your arms up to shoulder height",
                "Keep your arms straight, do not bend your elbows",
                "Lift both arms evenly",
            ],
        ),
    };

    let mut classes = vec![ClassLabel::correct(0)];
    classes.extend(
        faults
            .iter()
            .enumerate()
            .map(|(i, text)| ClassLabel::fault(i as u8 + 1, *text)),
    );

    ExerciseSpec {
        exercise,
        landmarks,
        edges,
        primary_landmark: primary,
        apex,
        facing_pair: facing,
        classes,
        reference_points: REFERENCE_POINTS,
    }
}

fn upper_body_landmarks() -> Vec<LandmarkId> {
    use LandmarkId::*;
    vec![LeftShoulder, LeftElbow, LeftWrist, RightShoulder, RightElbow, RightWrist]
}

fn upper_body_edges() -> Vec<(LandmarkId, LandmarkId)> {
    use LandmarkId::*;
    vec![
        (LeftShoulder, LeftElbow),
        (LeftElbow, LeftWrist),
        (RightShoulder, RightElbow),
        (RightElbow, RightWrist),
        (LeftShoulder, RightShoulder),
    ]
}

/// One repetition: frame range in the source series plus per-landmark 2D
/// trajectories (spec landmark order).
#[derive(Debug, Clone, PartialEq)]
pub struct RepSegment {
    pub rep_index: usize,
    pub start_frame: usize,
    pub end_frame: usize,
    pub landmarks: Vec<LandmarkId>,
    pub trajectories: Vec<Vec<[f64; 2]>>,
    pub label: Option<ClassLabel>,
}

impl RepSegment {
    /// Number of frames in the rep.
    pub fn len(&self) -> usize {
        self.trajectories.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self) -> Result<()> {
        if self.start_frame >= self.end_frame {
            return Err(Error::input(format!(
                "rep {}: start frame {} not before end frame {}",
                self.rep_index, self.start_frame, self.end_frame
            )));
        }
        if self.trajectories.len() != self.landmarks.len() {
            return Err(Error::input(format!(
                "rep {}: {} trajectories for {} landmarks",
                self.rep_index,
                self.trajectories.len(),
                self.landmarks.len()
            )));
        }
        let expected = self.end_frame - self.start_frame + 1;
        if let Some((i, t)) = self
            .trajectories
            .iter()
            .enumerate()
            .find(|(_, t)| t.len() != expected)
        {
            return Err(Error::input(format!(
                "rep {}: trajectory of {} has {} frames, expected {expected}",
                self.rep_index,
                self.landmarks[i],
                t.len()
            )));
        }
        Ok(())
    }
}

/// Which series rule a frame breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum ViolationRule {
    MissingLandmark(LandmarkId),
    VisibilityOutOfRange(LandmarkId),
    NonFiniteValue(LandmarkId),
    /// Timestamp not strictly greater than the previous frame's.
    NonMonotonicTimestamp,
    /// Landmark set differs from the first frame's.
    LandmarkSetMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub frame: usize,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            ViolationRule::MissingLandmark(id) => write!(f, "frame {}: missing {id}", self.frame),
            ViolationRule::VisibilityOutOfRange(id) => {
                write!(f, "frame {}: visibility of {id} outside [0,1]", self.frame)
            }
            ViolationRule::NonFiniteValue(id) => {
                write!(f, "frame {}: non-finite value for {id}", self.frame)
            }
            ViolationRule::NonMonotonicTimestamp => {
                write!(f, "frame {}: timestamp not after previous frame", self.frame)
            }
            ViolationRule::LandmarkSetMismatch => {
                write!(f, "frame {}: landmark set differs from frame 0", self.frame)
            }
        }
    }
}

/// Lists every rule violation of `series` against `spec`. An empty list
/// means the series is usable for that exercise.
pub fn validate_series(series: &LandmarkSeries, spec: &ExerciseSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let reference: Vec<LandmarkId> = series.landmark_ids();
    for (i, frame) in series.frames.iter().enumerate() {
        if i > 0 && !(frame.timestamp > series.frames[i - 1].timestamp) {
            out.push(Violation {
                frame: i,
                rule: ViolationRule::NonMonotonicTimestamp,
            });
        }
        let mut missing = false;
        for &id in &spec.landmarks {
            if !frame.landmarks.contains_key(&id) {
                missing = true;
                out.push(Violation {
                    frame: i,
                    rule: ViolationRule::MissingLandmark(id),
                });
            }
        }
        if !missing && !frame.landmarks.keys().copied().eq(reference.iter().copied()) {
            out.push(Violation {
                frame: i,
                rule: ViolationRule::LandmarkSetMismatch,
            });
        }
        for (&id, lm) in &frame.landmarks {
            if lm.position.iter().any(|v| !v.is_finite()) || !lm.visibility.is_finite() {
                out.push(Violation {
                    frame: i,
                    rule: ViolationRule::NonFiniteValue(id),
                });
            } else if !(0.0..=1.0).contains(&lm.visibility) {
                out.push(Violation {
                    frame: i,
                    rule: ViolationRule::VisibilityOutOfRange(id),
                });
            }
        }
    }
    out
}
