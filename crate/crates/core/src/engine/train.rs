//! One-step supervised training of the engine on correct reps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{landmark_states, Topology, Variant};
use super::optim::{AdamW, OneCycle};
use super::{backward_batch, push_scaled, run_batch, BatchTape, Engine, EngineArch, FlatBatch, Nets};
use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, RepSegment};
use crate::par::{derive_seed, map_indexed, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub peak_lr: f64,
    /// Share of all optimizer steps spent warming up.
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    /// Training pairs per optimizer step.
    pub batch_size: usize,
    /// Pairs per gradient shard; shards run in parallel and are summed in
    /// order.
    pub shard_size: usize,
    /// Share of reps held out for early stopping, in (0, 0.5].
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 2500,
            patience: 100,
            peak_lr: 3e-4,
            warmup_fraction: 0.3,
            weight_decay: 0.01,
            batch_size: 32,
            shard_size: 16,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.shard_size == 0 {
            return Err(Error::config("max_epochs, batch_size and shard_size must be positive"));
        }
        if !(self.peak_lr > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::config("peak_lr must be positive and weight_decay non-negative"));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return Err(Error::config("warmup_fraction must lie in (0, 1)"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::config("validation_fraction must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    /// (training loss, validation loss) per epoch, in network units.
    pub history: Vec<(f64, f64)>,
    pub validation_reps: Vec<usize>,
}

/// Training pairs flattened once: landmark states at t and velocity at t+1.
struct Pairs {
    states: Vec<Vec<[f64; 4]>>,
    targets: Vec<Vec<[f64; 2]>>,
}

impl Pairs {
    fn collect(reps: &[&RepSegment]) -> Self {
        let mut states = Vec::new();
        let mut targets = Vec::new();
        for rep in reps {
            for t in 0..rep.len().saturating_sub(1) {
                states.push(landmark_states(rep, t));
                targets.push(landmark_states(rep, t + 1).iter().map(|s| [s[2], s[3]]).collect());
            }
        }
        Pairs { states, targets }
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    fn batch(&self, idx: &[usize], topo: &Topology, variant: Variant, scale: f64) -> (FlatBatch, Vec<f64>) {
        let mut b = FlatBatch::default();
        let mut t = Vec::with_capacity(idx.len() * topo.landmarks * 2);
        for &i in idx {
            push_scaled(&mut b, topo, variant, scale, &self.states[i]);
            for v in &self.targets[i] {
                t.push(v[0] * scale);
                t.push(v[1] * scale);
            }
        }
        (b, t)
    }
}

fn mean_loss(nets: &Nets, topo: &Topology, variant: Variant, scale: f64, pairs: &Pairs, exec: Execution) -> f64 {
    const CHUNK: usize = 256;
    let chunks = pairs.len().div_ceil(CHUNK);
    let sums = map_indexed(exec, chunks, |c| {
        let idx: Vec<usize> = (c * CHUNK..((c + 1) * CHUNK).min(pairs.len())).collect();
        let (b, t) = pairs.batch(&idx, topo, variant, scale);
        let out = run_batch::<ChaCha8Rng>(nets, topo, variant, &b, None);
        out.iter().zip(&t).map(|(o, y)| (o - y).powi(2)).sum::<f64>()
    });
    sums.iter().sum::<f64>() / (pairs.len() * topo.landmarks * 2).max(1) as f64
}

/// Trains `variant` on one-step pairs from `reps`, early-stopping on held-out
/// reps and restoring the best weights.
pub fn train(
    reps: &[RepSegment],
    spec: &ExerciseSpec,
    cfg: &TrainConfig,
    variant: Variant,
    arch: &EngineArch,
    exec: Execution,
) -> Result<(Engine, TrainReport)> {
    cfg.check()?;
    arch.check()?;
    if reps.len() < 2 {
        return Err(Error::input(format!("training needs at least 2 reps, got {}", reps.len())));
    }
    if let Some(r) = reps.iter().find(|r| r.len() < 2 || r.trajectories.len() != spec.landmarks.len()) {
        return Err(Error::input(format!("rep {} unusable for training", r.rep_index)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((cfg.validation_fraction * reps.len() as f64).round() as usize).clamp(1, reps.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut validation_reps = val_idx.to_vec();
    validation_reps.sort_unstable();
    let train_reps: Vec<&RepSegment> = train_idx.iter().map(|&i| &reps[i]).collect();
    let val_reps: Vec<&RepSegment> = validation_reps.iter().map(|&i| &reps[i]).collect();
    let train_pairs = Pairs::collect(&train_reps);
    let val_pairs = Pairs::collect(&val_reps);

    let sq: f64 = train_pairs.targets.iter().flatten().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
    let rms = (sq / (2 * train_pairs.len() * spec.landmarks.len()).max(1) as f64).sqrt();
    let scale = if rms > 1e-9 { 1.0 / rms } else { 1.0 };

    let topo = Topology::build(spec, variant);
    let k = topo.landmarks;
    let mut nets = Nets::init(arch, variant, k, &mut rng);
    let steps_per_epoch = train_pairs.len().div_ceil(cfg.batch_size);
    let schedule = OneCycle::new(cfg.peak_lr, cfg.max_epochs * steps_per_epoch, cfg.warmup_fraction);
    let mut opt = AdamW::new(nets.param_count(), cfg.weight_decay);

    let mut params = nets.flat_params();
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    let mut history = Vec::new();
    let mut waited = 0usize;
    let mut step = 0usize;
    let mut perm: Vec<usize> = (0..train_pairs.len()).collect();

    for epoch in 0..cfg.max_epochs {
        perm.shuffle(&mut rng);
        let mut train_sum = 0.0;
        for batch_idx in perm.chunks(cfg.batch_size) {
            let shards: Vec<&[usize]> = batch_idx.chunks(cfg.shard_size).collect();
            let denom = (batch_idx.len() * k * 2) as f64;
            let step_seed = derive_seed(cfg.seed, step as u64);
            let results = map_indexed(exec, shards.len(), |s| {
                let (b, t) = train_pairs.batch(shards[s], &topo, variant, scale);
                let mut mask_rng = ChaCha8Rng::seed_from_u64(derive_seed(step_seed, s as u64));
                let mut tape = BatchTape::default();
                let out = run_batch(&nets, &topo, variant, &b, Some((&mut mask_rng, &mut tape)));
                let mut loss = 0.0;
                let d: Vec<f64> = out
                    .iter()
                    .zip(&t)
                    .map(|(o, y)| {
                        loss += (o - y).powi(2);
                        2.0 * (o - y) / denom
                    })
                    .collect();
                let mut grad = vec![0.0; nets.param_count()];
                backward_batch(&nets, &topo, variant, b.graphs, &tape, &d, &mut grad);
                (grad, loss)
            });
            let mut grad = vec![0.0; params.len()];
            for (g, l) in &results {
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
                train_sum += l;
            }
            opt.step(&mut params, &grad, schedule.lr(step));
            nets.set_flat_params(&params);
            step += 1;
        }
        let train_loss = train_sum / (train_pairs.len() * k * 2).max(1) as f64;
        let val_loss = mean_loss(&nets, &topo, variant, scale, &val_pairs, exec);
        history.push((train_loss, val_loss));
        if val_loss < best.0 {
            best = (val_loss, params.clone(), epoch);
            waited = 0;
        } else {
            waited += 1;
            if waited > cfg.patience {
                break;
            }
        }
    }

    nets.set_flat_params(&best.1);
    let report = TrainReport {
        epochs_run: history.len(),
        best_epoch: best.2,
        best_validation_loss: best.0,
        history,
        validation_reps,
    };
    let engine = Engine {
        variant,
        exercise: spec.exercise,
        arch: arch.clone(),
        config: cfg.clone(),
        velocity_scale: scale,
        nets,
    };
    Ok((engine, report))
}
