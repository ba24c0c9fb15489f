//! Random forest of CART trees with Gini splits and bootstrap aggregation.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassLabel, ExerciseSpec};
use crate::par::{derive_seed, map_indexed, Execution};
use crate::signature::ErrorSignature;

/// Number of features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRule {
    Sqrt,
    Log2,
    All,
}

impl FeatureRule {
    pub fn count(self, features: usize) -> usize {
        let f = features as f64;
        let n = match self {
            FeatureRule::Sqrt => f.sqrt().floor() as usize,
            FeatureRule::Log2 => f.log2().floor() as usize,
            FeatureRule::All => features,
        };
        n.clamp(1, features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows trees until purity or the leaf limit.
    pub max_depth: Option<usize>,
    pub max_features: FeatureRule,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_depth: None,
            max_features: FeatureRule::Sqrt,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn check(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::config("a forest needs at least one tree"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::config("max_depth must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Predicts a class index into [`Forest::classes`].
    Leaf { class: usize },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    /// Class ids in ascending order.
    pub classes: Vec<u8>,
    pub features: usize,
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

/// Per-class vote fractions and the argmax class (lowest id on ties).
fn vote(forest: &Forest, x: &[f64]) -> (usize, Vec<f64>) {
    let mut votes = vec![0usize; forest.classes.len()];
    for t in &forest.trees {
        votes[t.predict(x)] += 1;
    }
    let best = (0..votes.len()).fold(0, |b, c| if votes[c] > votes[b] { c } else { b });
    let n = forest.trees.len() as f64;
    (best, votes.iter().map(|&v| v as f64 / n).collect())
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> u8 {
        self.classes[vote(self, x).0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        vote(self, x).1
    }
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    cfg: &'a ForestConfig,
    mtry: usize,
}

impl Grower<'_> {
    fn majority(&self, idx: &[usize]) -> (usize, bool) {
        let mut counts = vec![0usize; self.classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        let best = (0..self.classes).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
        (best, counts[best] == idx.len())
    }

    /// Best (feature, threshold) by Gini over a random feature subset.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let mut total = vec![0usize; self.classes];
        for &i in idx {
            total[self.y[i]] += 1;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in sample(rng, self.x[0].len(), self.mtry).into_iter() {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x[i][feature], self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; self.classes];
            // sum of squared class counts on each side
            let mut sq_left = 0.0;
            let mut sq_right: f64 = total.iter().map(|&c| (c * c) as f64).sum();
            for s in 0..n - 1 {
                let c = order[s].1;
                sq_left += (2 * left[c] + 1) as f64;
                let right_c = total[c] - left[c];
                sq_right -= (2 * right_c - 1) as f64;
                left[c] += 1;
                let nl = s + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf || order[s].0 >= order[s + 1].0 {
                    continue;
                }
                let score = sq_left / nl as f64 + sq_right / nr as f64;
                if best.is_none_or(|b| score > b.0) {
                    let (a, b) = (order[s].0, order[s + 1].0);
                    let mid = a + (b - a) / 2.0;
                    best = Some((score, feature, if mid < b { mid } else { a }));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, root: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let (class, pure) = self.majority(&idx);
            let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
            let split = if pure || !depth_ok || idx.len() < 2 * self.cfg.min_samples_leaf {
                None
            } else {
                self.best_split(&idx, rng)
            };
            match split {
                None => nodes[slot] = Node::Leaf { class },
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { class: 0 });
                    nodes.push(Node::Leaf { class: 0 });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

/// Fits a forest on raw feature rows. Tree `i` draws from
/// `derive_seed(cfg.seed, i)`, so the result does not depend on `exec`.
pub fn fit_forest(x: &[Vec<f64>], y: &[u8], cfg: &ForestConfig, exec: Execution) -> Result<Forest> {
    cfg.check()?;
    if x.len() != y.len() {
        return Err(Error::input(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let features = x.first().map_or(0, Vec::len);
    if features == 0 || x.iter().any(|r| r.len() != features) {
        return Err(Error::input("forest rows must share a non-zero length"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("forest rows must be finite"));
    }
    let mut classes: Vec<u8> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::input("forest training needs at least 2 classes"));
    }
    if let Some(c) = classes.iter().find(|&&c| y.iter().filter(|&&v| v == c).count() < 2) {
        return Err(Error::input(format!("class {c} has fewer than 2 rows")));
    }
    let yi: Vec<usize> = y.iter().map(|v| classes.binary_search(v).unwrap()).collect();
    let grower = Grower {
        x,
        y: &yi,
        classes: classes.len(),
        cfg,
        mtry: cfg.max_features.count(features),
    };
    let trees = map_indexed(exec, cfg.trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, t as u64));
        let idx: Vec<usize> = if cfg.bootstrap {
            (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect()
        } else {
            (0..x.len()).collect()
        };
        grower.grow(idx, &mut rng)
    });
    Ok(Forest {
        classes,
        features,
        config: cfg.clone(),
        trees,
    })
}

/// Fits a forest on labeled signatures.
pub fn train_forest(rows: &[(ErrorSignature, u8)], cfg: &ForestConfig, exec: Execution) -> Result<Forest> {
    let x: Vec<Vec<f64>> = rows.iter().map(|(s, _)| s.values.clone()).collect();
    let y: Vec<u8> = rows.iter().map(|r| r.1).collect();
    fit_forest(&x, &y, cfg, exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub rep_index: usize,
    pub label: ClassLabel,
    /// (class id, vote fraction) in ascending id order.
    pub probabilities: Vec<(u8, f64)>,
    /// Display text; empty for the correct class.
    pub recommendation: String,
    /// Milliseconds from rep completion to emission.
    pub latency_ms: f64,
}

/// Majority vote of `forest` on `signature`, mapped to the class of `spec`.
/// `rep_index` and `latency_ms` are left at 0 for the caller to fill in.
pub fn classify(forest: &Forest, signature: &ErrorSignature, spec: &ExerciseSpec) -> Result<Diagnosis> {
    if signature.len() != forest.features {
        return Err(Error::input(format!(
            "signature has {} features, forest expects {}",
            signature.len(),
            forest.features
        )));
    }
    let (best, probs) = vote(forest, &signature.values);
    let id = forest.classes[best];
    let label = spec
        .class(id)
        .ok_or_else(|| Error::input(format!("forest class {id} unknown to {}", spec.exercise)))?
        .clone();
    Ok(Diagnosis {
        rep_index: 0,
        recommendation: label.recommendation.clone(),
        label,
        probabilities: forest.classes.iter().copied().zip(probs).collect(),
        latency_ms: 0.0,
    })
}

pub const FOREST_FORMAT: &str = "formsense-forest";
pub const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    forest: Forest,
}

pub fn save_forest(forest: &Forest, path: impl AsRef<Path>) -> Result<()> {
    let c = Container {
        format: FOREST_FORMAT.into(),
        version: FOREST_VERSION,
        forest: forest.clone(),
    };
    let text = serde_json::to_string(&c).map_err(|e| Error::Checkpoint(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_forest(path: impl AsRef<Path>) -> Result<Forest> {
    let text = fs::read_to_string(path)?;
    let c: Container = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if c.format != FOREST_FORMAT {
        return Err(Error::Checkpoint(format!("not a forest checkpoint: `{}`", c.format)));
    }
    if c.version != FOREST_VERSION {
        return Err(Error::Checkpoint(format!("unsupported forest version {}", c.version)));
    }
    Ok(c.forest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let d = i as f64 * 0.1;
            x.push(vec![d, 1.0 - d]);
            y.push(0);
            x.push(vec![3.0 + d, 4.0 + d]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (x, y) = blobs();
        let f = fit_forest(&x, &y, &ForestConfig::default(), Execution::Sequential).unwrap();
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(f.predict(r), l);
        }
    }

    #[test]
    fn depth_one_tree_cannot_solve_xor() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64]).collect();
        let y: Vec<u8> = x.iter().map(|r| (r[0] as u8) ^ (r[1] as u8)).collect();
        let cfg = ForestConfig {
            trees: 1,
            max_depth: Some(1),
            max_features: FeatureRule::All,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let f = fit_forest(&x, &y, &cfg, Execution::Sequential).unwrap();
        assert!(f.trees[0].depth() <= 1);
        let acc = x.iter().zip(&y).filter(|(r, &l)| f.predict(r) == l).count() as f64 / 40.0;
        assert!(acc <= 0.75);
    }

    #[test]
    fn parallel_equals_sequential() {
        let (x, y) = blobs();
        let cfg = ForestConfig { trees: 16, ..ForestConfig::default() };
        let a = fit_forest(&x, &y, &cfg, Execution::Sequential).unwrap();
        let b = fit_forest(&x, &y, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            fit_forest(&x, &[0, 0], &ForestConfig::default(), Execution::Sequential),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn one_tree_is_one_hot() {
        let (x, y) = blobs();
        let cfg = ForestConfig { trees: 1, ..ForestConfig::default() };
        let f = fit_forest(&x, &y, &cfg, Execution::Sequential).unwrap();
        let p = f.predict_proba(&[0.5, 0.5]);
        assert!(p.iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(p.iter().sum::<f64>(), 1.0);
    }
}
