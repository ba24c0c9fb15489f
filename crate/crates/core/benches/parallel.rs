//! Sequential versus data-parallel execution of the heavy stages: forest
//! fitting, batch rollouts and engine training epochs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use formsense_core::diagnosis::{fit_forest, ForestConfig};
use formsense_core::engine::{rollout_all, train, EngineArch, TrainConfig, Variant};
use formsense_core::preprocess::{build_segment, SmoothingConfig};
use formsense_core::rig::{generate, RigConfig};
use formsense_core::{exercise_preset, Exercise, Execution, RepSegment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn reps(sessions: u64) -> Vec<RepSegment> {
    let spec = exercise_preset(Exercise::Squats);
    let mut out = Vec::new();
    for seed in 0..sessions {
        let o = generate(&RigConfig { seed, ..RigConfig::default() }, spec).unwrap();
        for (i, &(a, b)) in o.truth.boundaries.iter().enumerate() {
            out.push(build_segment(&o.series, spec, i, a, b, &SmoothingConfig::default()).unwrap());
        }
    }
    out
}

fn arch() -> EngineArch {
    EngineArch {
        effect_dim: 16,
        relation_hidden: vec![64; 3],
        object_hidden: vec![64; 4],
        mlp_hidden: vec![64; 3],
        dropout: 0.1,
    }
}

fn forest(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<Vec<f64>> = (0..300).map(|_| (0..110).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + r[1] > 0.0) + u8::from(r[2] > 0.5)).collect();
    let cfg = ForestConfig {
        trees: 100,
        ..ForestConfig::default()
    };
    let mut group = c.benchmark_group("fit_forest");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| fit_forest(&x, &y, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn rollouts(c: &mut Criterion) {
    let spec = exercise_preset(Exercise::Squats);
    let segments = reps(4);
    let cfg = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let (engine, _) = train(&segments, spec, &cfg, Variant::In, &arch(), Execution::Parallel).unwrap();
    let mut group = c.benchmark_group("rollout_all");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| rollout_all(&engine, &segments, spec, exec).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let spec = exercise_preset(Exercise::Squats);
    let segments = reps(2);
    let cfg = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("train_two_epochs");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| train(&segments, spec, &cfg, Variant::In, &arch(), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forest, rollouts, training);
criterion_main!(benches);
