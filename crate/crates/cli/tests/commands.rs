use std::fs;
use std::path::Path;

use formsense::commands::{diagnose, export, generate, load_pipeline, read_truth, train, truth_path, watch};
use formsense::{CliError, PipelineConfig};
use formsense_core::ingestion::{read_series, series_to_string};
use formsense_core::Execution;

fn small_config(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml(
        r#"
        [arch]
        relation_hidden = [16, 16]
        object_hidden = [16, 16]
        mlp_hidden = [16, 16]
        effect_dim = 8
        dropout = 0.0
        [train]
        max_epochs = 4
        [search]
        trees = [10, 20]
        max_depth = [4]
        max_features = ["sqrt"]
        min_samples_leaf = [1]
        candidates = 2
        folds = 2
        [dataset]
        sessions_per_class = 2
        reps_per_session = 4
        [rig]
        reps = 4
        "#,
    )
    .unwrap();
    cfg.data_dir = dir.join("data");
    cfg
}

#[test]
fn generate_writes_series_and_truth_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let written = generate::generate_session(&cfg, Some(&a)).unwrap();
    assert_eq!(written, vec![a.clone(), truth_path(&a)]);
    generate::generate_session(&cfg, Some(&b)).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(truth_path(&a)).unwrap(), fs::read(truth_path(&b)).unwrap());
    let truth = read_truth(&truth_path(&a)).unwrap();
    assert_eq!(truth.boundaries.len(), 4);
    assert_eq!(read_series(&a).unwrap().len(), 4 * cfg.rig.frames_per_rep + 1);
}

#[test]
fn zero_reps_is_a_config_error_before_any_write() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.rig.reps = 0;
    let out = dir.path().join("x.csv");
    let err = generate::generate_session(&cfg, Some(&out)).unwrap_err();
    assert!(err.to_string().contains("configuration"), "{err}");
    assert!(!out.exists());
    assert!(!truth_path(&out).exists());
}

#[test]
fn training_without_correct_sessions_names_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.dataset.classes = vec![0, 1];
    generate::generate_sessions(&cfg).unwrap();
    for entry in fs::read_dir(cfg.sessions_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap().to_string_lossy().contains("-c0-") {
            fs::remove_file(p).unwrap();
        }
    }
    let err = train::train(&cfg, Execution::Sequential).unwrap_err();
    assert!(matches!(err, CliError::Stage { stage: "fit", .. }), "{err}");
    assert!(err.to_string().contains("correct class"), "{err}");
}

#[test]
fn train_diagnose_watch_and_export_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    generate::generate_sessions(&cfg).unwrap();
    let outcome = train::train(&cfg, Execution::Sequential).unwrap();
    for f in &outcome.files {
        assert!(f.exists(), "{}", f.display());
    }
    let report = fs::read(cfg.report_path()).unwrap();
    let forest = fs::read(cfg.forest_path()).unwrap();
    train::train(&cfg, Execution::Sequential).unwrap();
    assert_eq!(report, fs::read(cfg.report_path()).unwrap());
    assert_eq!(forest, fs::read(cfg.forest_path()).unwrap());

    let session = dir.path().join("session.csv");
    generate::generate_session(&cfg, Some(&session)).unwrap();
    let batch = diagnose::diagnose(&cfg, &session, Execution::Sequential).unwrap();
    assert_eq!(batch.len(), 4);
    let table = diagnose::diagnosis_table(&batch).render();
    assert_eq!(table.lines().count(), 5);

    let mut emitted = Vec::new();
    let fast = formsense::config::WatchConfig {
        pace: false,
        queue_capacity: 2,
    };
    let report = watch::watch(
        load_pipeline(&cfg).unwrap(),
        cfg.online,
        &fast,
        fs::File::open(&session).unwrap(),
        |o| emitted.push(o.clone()),
    );
    assert!(report.error.is_none());
    assert_eq!(report.metrics.rep_count, 4);
    assert_eq!(report.metrics.reps_dropped, 0);
    assert!(report.metrics.detection_lags_s.iter().all(|&l| l >= 0.0));
    assert_eq!(emitted, report.metrics.outcomes);
    assert_eq!(diagnose::label_sequence(&batch), diagnose::label_sequence(&emitted));

    let plots = dir.path().join("plots");
    export::export_plots(&cfg, &session, &plots, Execution::Sequential).unwrap();
    let peaks = fs::read_to_string(plots.join(export::PEAKS_FILE)).unwrap();
    let kept = peaks.lines().skip(1).filter(|l| l.split('\t').nth(3) == Some("1"));
    assert_eq!(kept.count(), 4);
    let mse = fs::read_to_string(plots.join(export::ROLLOUT_FILE)).unwrap();
    assert!(mse.lines().nth(1).unwrap().starts_with("in\t4\t"));
}

fn empty_series_file(dir: &Path) -> std::path::PathBuf {
    let text = series_to_string(&read_series(dir.join("session.csv")).unwrap());
    let header = text.lines().next().unwrap();
    let path = dir.join("empty.csv");
    fs::write(&path, format!("{header}\n")).unwrap();
    assert!(read_series(&path).unwrap().is_empty());
    path
}

#[test]
fn empty_inputs_give_zero_reps_and_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    generate::generate_sessions(&cfg).unwrap();
    train::train(&cfg, Execution::Sequential).unwrap();
    generate::generate_session(&cfg, Some(&dir.path().join("session.csv"))).unwrap();
    let empty = empty_series_file(dir.path());

    assert!(diagnose::diagnose(&cfg, &empty, Execution::Sequential).unwrap().is_empty());
    let report = watch::watch(
        load_pipeline(&cfg).unwrap(),
        cfg.online,
        &formsense::config::WatchConfig::default(),
        fs::File::open(&empty).unwrap(),
        |_| panic!("no reps expected"),
    );
    assert!(report.error.is_none());
    assert_eq!(report.metrics.rep_count, 0);
    assert!(report.metrics.summary().contains("reps 0"));

    let plots = dir.path().join("plots");
    let written = export::export_plots(&cfg, &empty, &plots, Execution::Sequential).unwrap();
    for p in written {
        let text = fs::read_to_string(&p).unwrap();
        if p.ends_with(export::EDGES_FILE) {
            continue;
        }
        assert_eq!(text.lines().count(), 1, "{}", p.display());
    }
}

#[test]
fn stream_error_flushes_partial_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    generate::generate_sessions(&cfg).unwrap();
    train::train(&cfg, Execution::Sequential).unwrap();
    let session = dir.path().join("session.csv");
    generate::generate_session(&cfg, Some(&session)).unwrap();
    let text = fs::read_to_string(&session).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines.len() * 3 / 4;
    let broken = format!("{}\nnot,a,record\n", lines[..cut].join("\n"));
    let report = watch::watch(
        load_pipeline(&cfg).unwrap(),
        cfg.online,
        &formsense::config::WatchConfig {
            pace: false,
            queue_capacity: 4,
        },
        std::io::Cursor::new(broken.into_bytes()),
        |_| {},
    );
    let err = report.error.expect("malformed record ends the stream");
    assert!(matches!(err, CliError::Stage { stage: "stream", .. }), "{err}");
    assert_eq!(report.metrics.frames, cut - 1);
    assert!(report.metrics.rep_count >= 1);
    assert_eq!(report.metrics.reps_dropped, 0);
}
