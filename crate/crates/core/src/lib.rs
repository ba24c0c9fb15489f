//! Exercise-form diagnosis from body-landmark time series.
//!
//! The pipeline splits a session into repetitions by peak prominence,
//! normalizes each rep, rolls it out through a learned interaction-network
//! physics engine trained on correctly performed reps, turns the per-landmark
//! rollout error into a fixed-length DTFT signature and classifies that
//! signature with a random forest into a corrective recommendation.

pub mod diagnosis;
pub mod engine;
pub mod error;
pub mod ingestion;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod rig;
pub mod segment;
pub mod signature;

pub use error::{Error, Result};
pub use model::{
    exercise_preset, exercise_preset_by_name, validate_series, ClassKind, ClassLabel, Exercise,
    ExerciseSpec, Landmark, LandmarkFrame, LandmarkId, LandmarkSeries, RepSegment, Violation,
    ViolationRule,
};
pub use par::Execution;
