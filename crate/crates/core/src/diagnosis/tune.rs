//! Randomized-search cross-validation over forest hyperparameters.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{fit_forest, FeatureRule, ForestConfig};
use super::metrics::weighted_f1;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub trees: Vec<usize>,
    /// `None` stands for unlimited depth, written as `0` in files.
    #[serde(with = "depth_list")]
    pub max_depth: Vec<Option<usize>>,
    pub max_features: Vec<FeatureRule>,
    pub min_samples_leaf: Vec<usize>,
    /// Configurations sampled without replacement from the grid.
    pub candidates: usize,
    pub folds: usize,
}

mod depth_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|d| d.unwrap_or(0)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        Ok(Vec::<usize>::deserialize(d)?.into_iter().map(|v| (v > 0).then_some(v)).collect())
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            trees: vec![100, 200, 300, 500],
            max_depth: vec![None, Some(8), Some(16)],
            max_features: vec![FeatureRule::Sqrt, FeatureRule::Log2],
            min_samples_leaf: vec![1, 2, 4],
            candidates: 25,
            folds: 5,
        }
    }
}

impl SearchSpace {
    pub fn check(&self) -> Result<()> {
        if self.trees.is_empty()
            || self.max_depth.is_empty()
            || self.max_features.is_empty()
            || self.min_samples_leaf.is_empty()
        {
            return Err(Error::config("every search dimension needs at least one choice"));
        }
        if self.candidates == 0 {
            return Err(Error::config("candidates must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        // every choice must itself be a valid forest config
        for c in self.grid(0) {
            c.check()?;
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.trees.len() * self.max_depth.len() * self.max_features.len() * self.min_samples_leaf.len()
    }

    /// All grid points, trees varying slowest.
    pub fn grid(&self, seed: u64) -> Vec<ForestConfig> {
        let mut out = Vec::with_capacity(self.grid_size());
        for &trees in &self.trees {
            for &max_depth in &self.max_depth {
                for &max_features in &self.max_features {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        out.push(ForestConfig {
                            trees,
                            max_depth,
                            max_features,
                            min_samples_leaf,
                            bootstrap: true,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn contains(&self, c: &ForestConfig) -> bool {
        self.trees.contains(&c.trees)
            && self.max_depth.contains(&c.max_depth)
            && self.max_features.contains(&c.max_features)
            && self.min_samples_leaf.contains(&c.min_samples_leaf)
    }
}

/// Fold index per row: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.len() < folds {
            return Err(Error::input(format!(
                "class {c} has {} rows, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = k % folds;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: ForestConfig,
    pub best_score: f64,
    /// Every sampled candidate with its mean CV weighted F1, in sample order.
    pub scores: Vec<(ForestConfig, f64)>,
}

/// Mean weighted F1 of `cfg` over the given folds.
pub fn cross_validate(x: &[Vec<f64>], y: &[u8], folds: &[usize], k: usize, cfg: &ForestConfig) -> Result<f64> {
    let mut total = 0.0;
    for f in 0..k {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..x.len() {
            if folds[i] == f {
                vx.push(x[i].clone());
                vy.push(y[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        let forest = fit_forest(&tx, &ty, cfg, Execution::Sequential)?;
        let pred: Vec<u8> = vx.iter().map(|r| forest.predict(r)).collect();
        total += weighted_f1(&pred, &vy)?;
    }
    Ok(total / k as f64)
}

/// Samples `space.candidates` configurations, scores each by stratified
/// k-fold CV and returns the best; ties go to fewer trees, then lower depth.
pub fn tune_forest(
    x: &[Vec<f64>],
    y: &[u8],
    space: &SearchSpace,
    seed: u64,
    exec: Execution,
) -> Result<TuneReport> {
    space.check()?;
    let folds = stratified_folds(y, space.folds, seed)?;
    let grid = space.grid(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<ForestConfig> = if space.candidates >= grid.len() {
        grid
    } else {
        sample(&mut rng, grid.len(), space.candidates)
            .into_iter()
            .map(|i| grid[i].clone())
            .collect()
    };
    let scores: Vec<f64> = map_indexed(exec, picked.len(), |c| cross_validate(x, y, &folds, space.folds, &picked[c]))
        .into_iter()
        .collect::<Result<_>>()?;
    let depth_key = |d: Option<usize>| d.unwrap_or(usize::MAX);
    let mut best = 0;
    for c in 1..picked.len() {
        let (a, b) = (&picked[c], &picked[best]);
        let better = scores[c] > scores[best]
            || (scores[c] == scores[best]
                && (a.trees, depth_key(a.max_depth)) < (b.trees, depth_key(b.max_depth)));
        if better {
            best = c;
        }
    }
    Ok(TuneReport {
        best: picked[best].clone(),
        best_score: scores[best],
        scores: picked.into_iter().zip(scores).collect(),
    })
}
