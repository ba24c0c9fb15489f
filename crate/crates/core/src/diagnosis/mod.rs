//! Rep classification from error signatures: random forest, randomized
//! search tuning, metrics and the evaluation harness.

pub mod evaluate;
pub mod forest;
pub mod metrics;
pub mod tune;

pub use evaluate::{
    evaluate, evaluate_split, fit_split, fit_split_engine, shuffle_labels, signature_rows, stratified_split, EvalConfig,
    EvaluationReport, FittedSplit, LabeledRep, SplitReport,
};
pub use forest::{
    classify, fit_forest, load_forest, save_forest, train_forest, Diagnosis, FeatureRule, Forest, ForestConfig,
    Node, Tree, FOREST_FORMAT, FOREST_VERSION,
};
pub use metrics::{accuracy, per_class, weighted_f1, ClassMetrics};
pub use tune::{cross_validate, stratified_folds, tune_forest, SearchSpace, TuneReport};
