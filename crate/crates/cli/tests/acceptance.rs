//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Runs every criterion even after a failure and exits 0, so the workspace
//! test run stays green while a failing criterion stays visible. Set
//! `FORMSENSE_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL, and
//! `FORMSENSE_ACCEPTANCE_ONLY=name,name` to run a subset.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use formsense::commands::{diagnose, evaluate, generate, load_pipeline, train, watch};
use formsense::config::WatchConfig;
use formsense::PipelineConfig;
use formsense_core::diagnosis::{evaluate as evaluate_splits, shuffle_labels, EvalConfig, SearchSpace};
use formsense_core::engine::{
    forward, grad_check, rollout, train as train_engine, DenseNet, EngineArch, GraphBatch, Relation, TrainConfig,
    Variant,
};
use formsense_core::pipeline::labeled_reps;
use formsense_core::preprocess::{build_segment, QualityGate, SmoothingConfig};
use formsense_core::rig::{generate as generate_rig, generate_dataset, DatasetConfig, RigConfig};
use formsense_core::segment::{counting_signal, find_peaks, segment_reps};
use formsense_core::signature::{grid_omega, signature, FEATURES_PER_LANDMARK, GRID_POINTS};
use formsense_core::{exercise_preset, Exercise, Execution, RepSegment};
use formsense_core::engine::RolloutError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

/// Network sizes used for experiments on the synthetic rig.
fn rig_arch() -> EngineArch {
    EngineArch {
        effect_dim: 16,
        relation_hidden: vec![64; 3],
        object_hidden: vec![64; 4],
        mlp_hidden: vec![64; 3],
        dropout: 0.1,
    }
}

fn rig_train(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 300,
        patience: 100,
        seed,
        ..TrainConfig::default()
    }
}

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- rep counting ----

fn rep_counting() -> Verdict {
    let mut series = Vec::new();
    for i in 0..20u64 {
        let exercise = Exercise::ALL[i as usize % Exercise::ALL.len()];
        let spec = exercise_preset(exercise);
        let class = &spec.classes[i as usize % spec.classes.len()];
        let cfg = RigConfig {
            exercise,
            reps: 5 + (i as usize % 6),
            fault_mode: (!class.is_correct()).then_some(class.id),
            fault_severity: if class.is_correct() { 0.0 } else { 0.8 },
            seed: 500 + i,
            ..RigConfig::default()
        };
        let out = generate_rig(&cfg, spec).map_err(|e| e.to_string())?;
        series.push((spec, out));
    }
    let t0 = Instant::now();
    let mut wrong = Vec::new();
    for (i, (spec, out)) in series.iter().enumerate() {
        let signal = counting_signal(&out.series, spec).map_err(|e| e.to_string())?;
        let got = segment_reps(&signal).count();
        if got != out.truth.boundaries.len() {
            wrong.push(format!("#{i} {}: {got} vs {}", spec.exercise, out.truth.boundaries.len()));
        }
    }
    let elapsed = t0.elapsed();
    check(
        wrong.is_empty() && elapsed < Duration::from_secs(1),
        format!("20 series, {} miscounted {wrong:?}, {elapsed:.2?}", wrong.len()),
    )
}

// ---- prominence oracle ----

/// Plateau-aware local maxima, each at the middle of its plateau (left of
/// centre for even widths), excluding runs touching either end.
fn oracle_peaks(s: &[f64]) -> Vec<usize> {
    let n = s.len();
    let mut out = Vec::new();
    let mut a = 0;
    while a < n {
        let mut b = a;
        while b + 1 < n && s[b + 1] == s[a] {
            b += 1;
        }
        if a > 0 && b + 1 < n && s[a - 1] < s[a] && s[b + 1] < s[a] {
            out.push((a + b) / 2);
        }
        a = b + 1;
    }
    out
}

/// Contour scan: lower a level through every distinct sample value until
/// the superlevel interval around the peak touches a strictly higher sample
/// or an end of the signal. The prominence is the height above that level.
fn oracle_prominence(s: &[f64], peak: usize) -> f64 {
    let h = s[peak];
    let mut levels: Vec<f64> = s.iter().copied().filter(|&v| v <= h).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    for c in levels {
        let mut lo = peak;
        while lo > 0 && s[lo - 1] >= c {
            lo -= 1;
        }
        let mut hi = peak;
        while hi + 1 < s.len() && s[hi + 1] >= c {
            hi += 1;
        }
        if lo == 0 || hi == s.len() - 1 || s[lo..=hi].iter().any(|&v| v > h) {
            return h - c;
        }
    }
    unreachable!("the lowest level reaches both ends")
}

fn prominence_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut peaks_checked = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=200);
        let s: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        } else {
            (0..n).map(|_| rng.gen_range(0..5) as f64).collect()
        };
        let got = find_peaks(&s);
        let expect = oracle_peaks(&s);
        let idx: Vec<usize> = got.iter().map(|p| p.index).collect();
        if idx != expect {
            return Err(format!("case {case}: peaks {idx:?} vs oracle {expect:?}"));
        }
        for p in &got {
            let o = oracle_prominence(&s, p.index);
            if p.prominence != o || p.height != s[p.index] {
                return Err(format!("case {case} peak {}: {} vs oracle {o}", p.index, p.prominence));
            }
        }
        peaks_checked += got.len();
    }
    let elapsed = t0.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("200 signals, {peaks_checked} peaks exact, {elapsed:.2?}"),
    )
}

// ---- gradient check ----

fn gradient_check() -> Verdict {
    let t0 = Instant::now();
    let arch = EngineArch {
        dropout: 0.0,
        ..EngineArch::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, sizes) in [("f_R", arch.relation_sizes()), ("f_O", arch.object_sizes())] {
        let net = DenseNet::init(&sizes, 0.0, &mut rng);
        let input: Vec<f64> = (0..net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = grad_check(&net, &input, 1e-5).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_relative_error);
        parts.push(format!("{name} {sizes:?} max rel {:.2e} ({} checked, {} skipped)", r.max_relative_error, r.checked, r.skipped));
        if r.checked == 0 {
            return Err(format!("{name}: nothing checked"));
        }
    }
    let elapsed = t0.elapsed();
    check(
        worst < 1e-4 && elapsed < Duration::from_secs(30),
        format!("{}; {elapsed:.2?}", parts.join("; ")),
    )
}

// ---- interaction-network forward algebra ----

/// Reference MLP over the documented flat layout: per layer, weights
/// `[in][out]` row-major, then biases; ReLU between layers.
fn mlp(net: &DenseNet, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    let mut off = 0;
    let layers = net.sizes.len() - 1;
    for l in 0..layers {
        let (i, o) = (net.sizes[l], net.sizes[l + 1]);
        let w = &net.params[off..off + i * o];
        let b = &net.params[off + i * o..off + i * o + o];
        off += i * o + o;
        let mut z = b.to_vec();
        for (j, zj) in z.iter_mut().enumerate() {
            for (k, ak) in a.iter().enumerate() {
                *zj += ak * w[k * o + j];
            }
        }
        a = if l + 1 < layers { z.into_iter().map(|v| v.max(0.0)).collect() } else { z };
    }
    a
}

/// `P = f_O([O; E R_r^T])` with `E = f_R([O R_s; O R_r; R_a])`, built from
/// explicit selector matrices.
fn matrix_oracle(batch: &GraphBatch, f_r: &DenseNet, f_o: &DenseNet) -> Vec<[f64; 2]> {
    let n = batch.objects.len();
    let e = batch.relations.len();
    let mut rs = vec![vec![0.0; e]; n];
    let mut rr = vec![vec![0.0; e]; n];
    for (j, r) in batch.relations.iter().enumerate() {
        rs[r.sender][j] = 1.0;
        rr[r.receiver][j] = 1.0;
    }
    let o = |d: usize, i: usize| batch.objects[i][d];
    let effects: Vec<Vec<f64>> = (0..e)
        .map(|j| {
            let mut b = Vec::new();
            for sel in [&rs, &rr] {
                for d in 0..4 {
                    b.push((0..n).map(|i| o(d, i) * sel[i][j]).sum());
                }
            }
            b.extend_from_slice(&batch.attributes[j]);
            mlp(f_r, &b)
        })
        .collect();
    let de = f_r.sizes[f_r.sizes.len() - 1];
    (0..n)
        .map(|i| {
            if i >= batch.landmarks {
                return [0.0, 0.0];
            }
            let mut c: Vec<f64> = (0..4).map(|d| o(d, i)).collect();
            for d in 0..de {
                c.push((0..e).map(|j| effects[j][d] * rr[i][j]).sum());
            }
            let p = mlp(f_o, &c);
            [p[0], p[1]]
        })
        .collect()
}

fn two_node_batch(objects: [[f64; 4]; 2], attributes: [[f64; 3]; 2]) -> GraphBatch {
    GraphBatch {
        objects: vec![objects[0], objects[1], [0.5, 0.0, 0.0, 0.0], [0.5, 1.0, 0.0, 0.0]],
        relations: vec![
            Relation { sender: 0, receiver: 1, flag: 1.0 },
            Relation { sender: 1, receiver: 0, flag: -1.0 },
        ],
        attributes: attributes.to_vec(),
        targets: vec![[0.0; 2]; 4],
        landmarks: 2,
    }
}

fn in_forward_algebra() -> Verdict {
    let no_dropout: Option<&mut ChaCha8Rng> = None;
    // Worked example: f_R sums its inputs, f_O returns (aggregate, x).
    let mut f_r = DenseNet::zeros(&[11, 1], 0.0);
    f_r.params[..11].fill(1.0);
    let mut f_o = DenseNet::zeros(&[5, 2], 0.0);
    f_o.params[4 * 2] = 1.0; // aggregate -> out 0
    f_o.params[0 * 2 + 1] = 1.0; // x -> out 1
    let batch = two_node_batch(
        [[0.1, 0.2, 0.3, 0.4], [1.0, 2.0, 3.0, 4.0]],
        [[0.5, 0.25, 1.0], [0.5, 0.25, -1.0]],
    );
    // relation 0->1: 1.0 + 10.0 + 1.75 = 12.75, received by node 1
    // relation 1->0: 10.0 + 1.0 - 0.25 = 10.75, received by node 0
    let hand = [[10.75, 0.1], [12.75, 1.0]];
    let got = forward(&batch, &f_r, &f_o, Variant::In, no_dropout).map_err(|e| e.to_string())?;
    for i in 0..2 {
        for d in 0..2 {
            if (got[i][d] - hand[i][d]).abs() > 1e-12 {
                return Err(format!("worked example node {i}: {:?} vs {:?}", got[i], hand[i]));
            }
        }
    }
    if got[2] != [0.0; 2] || got[3] != [0.0; 2] {
        return Err("reference rows must be zero".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let f_r = DenseNet::init(&[11, 7, 5, 3], 0.0, &mut rng);
        let f_o = DenseNet::init(&[7, 6, 2], 0.0, &mut rng);
        let mut obj = [[0.0; 4]; 2];
        let mut att = [[0.0; 3]; 2];
        for v in obj.iter_mut().flatten().chain(att.iter_mut().flatten()) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let batch = two_node_batch(obj, att);
        let no_dropout: Option<&mut ChaCha8Rng> = None;
        let got = forward(&batch, &f_r, &f_o, Variant::In, no_dropout).map_err(|e| e.to_string())?;
        let want = matrix_oracle(&batch, &f_r, &f_o);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g[0] - w[0]).abs()).max((g[1] - w[1]).abs());
        }
    }
    check(worst <= 1e-12, format!("worked example exact; 50 random batches max abs diff {worst:.1e}"))
}

// ---- rollout ordering ----

fn rig_reps(seed_base: u64, sessions: u64) -> Result<Vec<RepSegment>, String> {
    let spec = exercise_preset(Exercise::Squats);
    let mut out = Vec::new();
    for s in 0..sessions {
        let cfg = RigConfig {
            seed: seed_base * 100 + s,
            ..RigConfig::default()
        };
        let o = generate_rig(&cfg, spec).map_err(|e| e.to_string())?;
        for (i, &(a, b)) in o.truth.boundaries.iter().enumerate() {
            out.push(build_segment(&o.series, spec, i, a, b, &SmoothingConfig::default()).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rollout_ordering() -> Verdict {
    let t0 = Instant::now();
    let spec = exercise_preset(Exercise::Squats);
    let arch = rig_arch();
    let variants = [Variant::In, Variant::Mlp, Variant::Indep, Variant::AttrHidden, Variant::Gc];
    let mut per_variant = vec![Vec::new(); variants.len()];
    for seed in 0..5u64 {
        let train_reps = rig_reps(seed, 4)?;
        let test_reps = rig_reps(1000 + seed, 2)?;
        for (vi, &v) in variants.iter().enumerate() {
            let (engine, _) = train_engine(&train_reps, spec, &rig_train(seed), v, &arch, Execution::Parallel)
                .map_err(|e| e.to_string())?;
            let errs = test_reps
                .iter()
                .map(|r| rollout(&engine, r, spec).map(|e| e.aggregate))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| e.to_string())?;
            per_variant[vi].push(errs.iter().sum::<f64>() / errs.len() as f64);
        }
    }
    let med: Vec<f64> = per_variant.into_iter().map(median).collect();
    let elapsed = t0.elapsed();
    let ratio = med[4] / med[0];
    let detail = format!(
        "median MSE in {:.5} mlp {:.5} indep {:.5} attr-hidden {:.5} gc {:.5} (gc/in {ratio:.2}); {elapsed:.0?}",
        med[0], med[1], med[2], med[3], med[4]
    );
    check(
        med[0] < med[1] && med[0] < med[2] && med[0] < med[3] && ratio <= 1.2 && elapsed < Duration::from_secs(900),
        detail,
    )
}

// ---- classification ----

fn classification_config(seed: u64) -> EvalConfig {
    EvalConfig {
        arch: rig_arch(),
        train: rig_train(seed),
        search: Some(SearchSpace::default()),
        ..EvalConfig::default()
    }
}

/// Expected weighted F1 of guessing by class frequency: sum of squared
/// class shares.
fn chance_f1(labels: &[u8]) -> f64 {
    let n = labels.len() as f64;
    (0..=u8::MAX)
        .map(|c| labels.iter().filter(|&&l| l == c).count() as f64 / n)
        .map(|p| p * p)
        .sum()
}

fn classification() -> Verdict {
    let t0 = Instant::now();
    let spec = exercise_preset(Exercise::Squats);
    let data = DatasetConfig {
        seed: 21,
        ..DatasetConfig::default()
    };
    let sessions: Vec<_> = generate_dataset(&data, spec)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|o| (o.series, o.truth.label.id))
        .collect();
    let dataset = labeled_reps(&sessions, spec, &SmoothingConfig::default(), &QualityGate::default(), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let labels: Vec<u8> = dataset.iter().map(|r| r.label).collect();
    let min_class = (0..3u8).map(|c| labels.iter().filter(|&&l| l == c).count()).min().unwrap_or(0);
    let seeds: Vec<u64> = (0..5).collect();
    let cfg = classification_config(0);
    let real = evaluate_splits(&dataset, spec, &cfg, &seeds, Execution::Parallel).map_err(|e| e.to_string())?;
    let control_set = shuffle_labels(&dataset, 99);
    let control = evaluate_splits(&control_set, spec, &cfg, &seeds, Execution::Parallel).map_err(|e| e.to_string())?;
    let chance = chance_f1(&labels);
    let elapsed = t0.elapsed();
    check(
        min_class >= 40 && real.mean_f1 >= 0.90 && (control.mean_f1 - chance).abs() <= 0.15,
        format!(
            "{} reps (min {min_class}/class); weighted F1 {:.3} ± {:.3}; shuffled {:.3} vs chance {chance:.3}; {elapsed:.0?}",
            dataset.len(),
            real.mean_f1,
            real.std_f1,
            control.mean_f1
        ),
    )
}

// ---- DTFT oracle ----

fn dtft_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=150);
        let per: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).collect();
        let sig = signature(&RolloutError::new(per.clone())).map_err(|e| e.to_string())?;
        if sig.len() != FEATURES_PER_LANDMARK * k || FEATURES_PER_LANDMARK != 22 {
            return Err(format!("length {} for {k} landmarks", sig.len()));
        }
        for (l, x) in per.iter().enumerate() {
            for g in 0..GRID_POINTS {
                let w = g as f64 * PI / 10.0;
                if (grid_omega(g) - w).abs() > 1e-15 {
                    return Err(format!("grid point {g} is {}", grid_omega(g)));
                }
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    re += v * (w * t as f64).cos();
                    im -= v * (w * t as f64).sin();
                }
                let amp = sig.amplitudes(l)[g];
                let phase = sig.phases(l)[g];
                let scale = 1.0f64.max((re * re + im * im).sqrt());
                worst = worst
                    .max((amp * phase.cos() - re).abs() / scale)
                    .max((amp * phase.sin() - im).abs() / scale)
                    .max((amp - (re * re + im * im).sqrt()).abs() / scale);
            }
        }
    }
    let lens: Vec<usize> = [5usize, 40, 113]
        .iter()
        .map(|&n| signature(&RolloutError::new(vec![vec![1.0; n]; 5])).map(|s| s.len()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-10 && lens.iter().all(|&l| l == 110),
        format!("100 series, max deviation {worst:.1e}; 5-landmark lengths {lens:?} for 5/40/113 steps"),
    )
}

// ---- latency and determinism ----

/// Pipeline settings for command-level criteria.
fn command_config(dir: &Path, epochs: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        data_dir: dir.join("data"),
        arch: rig_arch(),
        train: TrainConfig {
            max_epochs: epochs,
            patience: 100,
            ..TrainConfig::default()
        },
        ..PipelineConfig::default()
    };
    cfg.dataset.seed = 7;
    cfg
}

fn latency() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = command_config(dir.path(), 300);
    generate::generate_sessions(&cfg).map_err(|e| e.to_string())?;
    train::train(&cfg, Execution::Parallel).map_err(|e| e.to_string())?;
    let session = dir.path().join("replay.csv");
    let replay = PipelineConfig {
        seed: 4242,
        ..cfg.clone()
    };
    generate::generate_session(&replay, Some(&session)).map_err(|e| e.to_string())?;
    let batch = diagnose::diagnose(&cfg, &session, Execution::Parallel).map_err(|e| e.to_string())?;
    let pipeline = load_pipeline(&cfg).map_err(|e| e.to_string())?;
    let file = fs::File::open(&session).map_err(|e| e.to_string())?;
    let report = watch::watch(pipeline, cfg.online, &WatchConfig::default(), file, |_| {});
    if let Some(e) = report.error {
        return Err(format!("watch failed: {e}"));
    }
    let m = &report.metrics;
    let (lat, lat_sd) = m.latency_stats();
    let (lag, lag_sd) = m.lag_stats();
    let same = diagnose::label_sequence(&batch) == diagnose::label_sequence(&m.outcomes);
    check(
        lat < 500.0 && m.reps_dropped == 0 && m.rep_count == batch.len() && same,
        format!(
            "{} reps paced at 30 Hz; compute latency {lat:.1} ± {lat_sd:.1} ms; detection lag {lag:.3} ± {lag_sd:.3} s; dropped {}; batch {} reps; labels identical: {same}",
            m.rep_count,
            m.reps_dropped,
            batch.len()
        ),
    )
}

fn machine_outputs(cfg: &PipelineConfig) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for p in [cfg.engine_path(), cfg.forest_path(), cfg.report_path(), cfg.data_dir.join("evaluation.json")] {
        let bytes = fs::read(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        out.push((p.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    Ok(out)
}

fn determinism() -> Verdict {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = command_config(dir.path(), 40);
        cfg.dataset.sessions_per_class = 4;
        cfg.search = Some(SearchSpace {
            candidates: 4,
            folds: 3,
            ..SearchSpace::default()
        });
        generate::generate_sessions(&cfg).map_err(|e| e.to_string())?;
        train::train(&cfg, Execution::Parallel).map_err(|e| e.to_string())?;
        evaluate::evaluate_command(&cfg, 2, true, Execution::Parallel).map_err(|e| e.to_string())?;
        runs.push(machine_outputs(&cfg)?);
    }
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    check(
        differing.is_empty(),
        format!("train + evaluate twice with seed 0: {names:?} identical; differing {differing:?}"),
    )
}

// ---- harness ----

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("rep-counting", rep_counting),
        ("prominence-oracle", prominence_oracle),
        ("gradient-check", gradient_check),
        ("in-forward-algebra", in_forward_algebra),
        ("rollout-ordering", rollout_ordering),
        ("classification", classification),
        ("dtft-oracle", dtft_oracle),
        ("latency", latency),
        ("determinism", determinism),
    ];
    let only: Option<Vec<String>> = std::env::var("FORMSENSE_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let strict = std::env::var("FORMSENSE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut passed, mut failed) = (0, 0);
    for (name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|n| n == name)) {
            continue;
        }
        let t0 = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => {
                passed += 1;
                println!("PASS {name} ({secs:.1}s): {detail}");
            }
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
