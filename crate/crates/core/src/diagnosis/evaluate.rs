//! Train/test evaluation of the full rep classifier: physics engine on the
//! correct reps of the training split, signatures for every rep, forest on
//! the training signatures, weighted F1 on the test split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{fit_forest, Forest, ForestConfig};
use super::metrics::{per_class, weighted_f1, ClassMetrics};
use super::tune::{tune_forest, SearchSpace};
use crate::engine::{rollout_all, train, Engine, EngineArch, TrainConfig, TrainReport, Variant};
use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, RepSegment};
use crate::par::{derive_seed, map_slice, Execution};
use crate::signature::signature;

/// A normalized rep with its class id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRep {
    pub segment: RepSegment,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Share of each class assigned to the training split.
    pub train_fraction: f64,
    pub variant: Variant,
    pub arch: EngineArch,
    pub train: TrainConfig,
    pub forest: ForestConfig,
    /// Tune the forest by randomized search instead of using `forest`.
    pub search: Option<SearchSpace>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.6,
            variant: Variant::In,
            arch: EngineArch::default(),
            train: TrainConfig::default(),
            forest: ForestConfig::default(),
            search: Some(SearchSpace::default()),
        }
    }
}

impl EvalConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        self.arch.check()?;
        self.train.check()?;
        self.forest.check()?;
        if let Some(s) = &self.search {
            s.check()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub seed: u64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub forest: ForestConfig,
    /// Dataset indices of the training split, ascending.
    pub train_reps: Vec<usize>,
    /// (dataset index, truth, prediction) for the test split, ascending.
    pub predictions: Vec<(usize, u8, u8)>,
}

/// A fitted engine and forest with their held-out report.
#[derive(Debug, Clone)]
pub struct FittedSplit {
    pub engine: Engine,
    pub forest: Forest,
    pub report: SplitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub runs: Vec<SplitReport>,
    pub mean_f1: f64,
    /// Population standard deviation over runs.
    pub std_f1: f64,
}

/// Stratified split: per class, shuffled, the first `round(fraction * n)`
/// (at least 1 and leaving at least 1) go to training.
pub fn stratified_split(labels: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.len() < 2 {
            return Err(Error::input(format!("class {c} needs at least 2 reps to split")));
        }
        idx.shuffle(&mut rng);
        let n = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        tr.extend_from_slice(&idx[..n]);
        te.extend_from_slice(&idx[n..]);
    }
    tr.sort_unstable();
    te.sort_unstable();
    Ok((tr, te))
}

fn check_dataset(dataset: &[LabeledRep], spec: &ExerciseSpec) -> Result<()> {
    if let Some(r) = dataset.iter().find(|r| spec.class(r.label).is_none()) {
        return Err(Error::input(format!("label {} is not a class of {}", r.label, spec.exercise)));
    }
    let correct = spec.correct_class().id;
    if !dataset.iter().any(|r| r.label == correct) {
        return Err(Error::input("dataset has no reps of the correct class"));
    }
    if !dataset.iter().any(|r| r.label != correct) {
        return Err(Error::input("dataset has no fault reps"));
    }
    Ok(())
}

/// Signature rows for `segments` under `engine`.
pub fn signature_rows(
    engine: &Engine,
    segments: &[&RepSegment],
    spec: &ExerciseSpec,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let owned: Vec<RepSegment> = segments.iter().map(|s| (*s).clone()).collect();
    let errors = rollout_all(engine, &owned, spec, exec)?;
    map_slice(exec, &errors, |e| signature(e).map(|s| s.values))
        .into_iter()
        .collect()
}

/// Trains the physics engine on the correct reps of the training split drawn
/// with `seed`. Returns the engine, its training report and the
/// (train, test) dataset indices.
pub fn fit_split_engine(
    dataset: &[LabeledRep],
    spec: &ExerciseSpec,
    cfg: &EvalConfig,
    seed: u64,
    exec: Execution,
) -> Result<(Engine, TrainReport, (Vec<usize>, Vec<usize>))> {
    cfg.check()?;
    check_dataset(dataset, spec)?;
    let labels: Vec<u8> = dataset.iter().map(|r| r.label).collect();
    let (train_idx, test_idx) = stratified_split(&labels, cfg.train_fraction, seed)?;
    let correct = spec.correct_class().id;
    let correct_reps: Vec<RepSegment> = train_idx
        .iter()
        .filter(|&&i| labels[i] == correct)
        .map(|&i| dataset[i].segment.clone())
        .collect();
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, 1),
        ..cfg.train.clone()
    };
    let (engine, report) = train(&correct_reps, spec, &train_cfg, cfg.variant, &cfg.arch, exec)?;
    Ok((engine, report, (train_idx, test_idx)))
}

/// Fits engine and forest on a stratified split and scores the test split.
pub fn fit_split(
    dataset: &[LabeledRep],
    spec: &ExerciseSpec,
    cfg: &EvalConfig,
    seed: u64,
    exec: Execution,
) -> Result<FittedSplit> {
    let (engine, _, (train_idx, test_idx)) = fit_split_engine(dataset, spec, cfg, seed, exec)?;
    let labels: Vec<u8> = dataset.iter().map(|r| r.label).collect();

    let all: Vec<&RepSegment> = dataset.iter().map(|r| &r.segment).collect();
    let rows = signature_rows(&engine, &all, spec, exec)?;
    let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].clone()).collect();
    let ty: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    let forest_seed = derive_seed(seed, 2);
    let forest_cfg = match &cfg.search {
        Some(space) => tune_forest(&tx, &ty, space, forest_seed, exec)?.best,
        None => ForestConfig {
            seed: forest_seed,
            ..cfg.forest.clone()
        },
    };
    let forest = fit_forest(&tx, &ty, &forest_cfg, exec)?;

    let predictions: Vec<(usize, u8, u8)> =
        test_idx.iter().map(|&i| (i, labels[i], forest.predict(&rows[i]))).collect();
    let pred: Vec<u8> = predictions.iter().map(|p| p.2).collect();
    let truth: Vec<u8> = predictions.iter().map(|p| p.1).collect();
    let report = SplitReport {
        seed,
        weighted_f1: weighted_f1(&pred, &truth)?,
        per_class: per_class(&pred, &truth)?,
        forest: forest_cfg,
        train_reps: train_idx,
        predictions,
    };
    Ok(FittedSplit { engine, forest, report })
}

pub fn evaluate_split(
    dataset: &[LabeledRep],
    spec: &ExerciseSpec,
    cfg: &EvalConfig,
    seed: u64,
    exec: Execution,
) -> Result<SplitReport> {
    fit_split(dataset, spec, cfg, seed, exec).map(|f| f.report)
}

/// [`evaluate_split`] over several seeds with mean and standard deviation.
pub fn evaluate(
    dataset: &[LabeledRep],
    spec: &ExerciseSpec,
    cfg: &EvalConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<EvaluationReport> {
    if seeds.is_empty() {
        return Err(Error::config("evaluation needs at least one seed"));
    }
    let runs = seeds
        .iter()
        .map(|&s| evaluate_split(dataset, spec, cfg, s, exec))
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len() as f64;
    let mean_f1 = runs.iter().map(|r| r.weighted_f1).sum::<f64>() / n;
    let std_f1 = (runs.iter().map(|r| (r.weighted_f1 - mean_f1).powi(2)).sum::<f64>() / n).sqrt();
    Ok(EvaluationReport { runs, mean_f1, std_f1 })
}

/// The dataset with its labels randomly permuted; a chance-level control.
pub fn shuffle_labels(dataset: &[LabeledRep], seed: u64) -> Vec<LabeledRep> {
    let mut labels: Vec<u8> = dataset.iter().map(|r| r.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    dataset
        .iter()
        .zip(labels)
        .map(|(r, label)| LabeledRep {
            segment: r.segment.clone(),
            label,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let (tr, te) = stratified_split(&labels, 0.6, 4).unwrap();
        assert_eq!(tr.len() + te.len(), 50);
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 0).count(), 15);
        assert!(tr.iter().all(|i| !te.contains(i)));
    }
}
