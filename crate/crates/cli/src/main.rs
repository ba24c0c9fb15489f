use std::fs::File;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use formsense::commands::{diagnose, evaluate, export, generate, load_pipeline, train, watch};
use formsense::PipelineConfig;
use formsense_core::engine::Variant;
use formsense_core::{Execution, Exercise};

#[derive(Debug, Parser)]
#[command(name = "formsense", version, about = "Exercise-form diagnosis from body-landmark time series")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed and FORMSENSE_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    exercise: Option<Exercise>,
    /// in, mlp, attr-hidden, indep, fc or gc.
    #[arg(long, global = true)]
    engine_variant: Option<Variant>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic sessions with truth files.
    Generate {
        /// Landmark file for a single session.
        #[arg(long, conflicts_with = "dataset")]
        out: Option<PathBuf>,
        /// Generate the [dataset] collection into the sessions directory.
        #[arg(long)]
        dataset: bool,
    },
    /// Train engine and forest on the sessions directory.
    Train {
        /// Train only the selected engine variant, for rollout comparisons.
        #[arg(long)]
        engine_only: bool,
    },
    /// Weighted F1 over several stratified splits.
    Evaluate {
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Repeat on shuffled labels as a chance-level control.
        #[arg(long)]
        control: bool,
    },
    /// Diagnose every rep of a landmark file.
    Diagnose {
        file: PathBuf,
        /// Also write the table to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diagnose reps as they complete on a landmark stream.
    Watch {
        /// Landmark file, or `-` for standard input.
        #[arg(default_value = "-")]
        source: String,
        /// Read as fast as possible instead of at the recorded frame rate.
        #[arg(long)]
        no_pace: bool,
        /// Write the session metrics as JSON.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Write tables for plotting a landmark file.
    ExportPlots {
        file: PathBuf,
        #[arg(long, default_value = "plots")]
        out_dir: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(exercise) = cli.exercise {
        cfg.exercise = exercise;
    }
    if let Some(variant) = cli.engine_variant {
        cfg.variant = variant;
    }
    Ok(cfg)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Generate { out, dataset } => {
            let written = if dataset {
                generate::generate_sessions(&cfg)?
            } else {
                generate::generate_session(&cfg, out.as_deref())?
            };
            print_paths(&written);
        }
        Command::Train { engine_only: true } => {
            print_paths(&[train::train_engine_only(&cfg, exec)?]);
        }
        Command::Train { engine_only: false } => {
            let outcome = train::train(&cfg, exec)?;
            print_paths(&outcome.files);
            let split = &outcome.report.split;
            for m in &split.per_class {
                println!(
                    "class {}  precision {:.3}  recall {:.3}  f1 {:.3}  support {}",
                    m.class, m.precision, m.recall, m.f1, m.support
                );
            }
            println!(
                "weighted F1 on held-out split: {:.4} ({} test reps)",
                split.weighted_f1,
                split.predictions.len()
            );
        }
        Command::Evaluate { runs, control } => {
            let (summary, path) = evaluate::evaluate_command(&cfg, runs, control, exec)?;
            print_paths(&[path]);
            println!(
                "weighted F1 {:.4} ± {:.4} over {} runs",
                summary.real.mean_f1, summary.real.std_f1, runs
            );
            if let Some(s) = &summary.shuffled {
                println!("shuffled-label control {:.4} ± {:.4}", s.mean_f1, s.std_f1);
            }
        }
        Command::Diagnose { file, out } => {
            let outcomes = diagnose::diagnose(&cfg, &file, exec)?;
            let table = diagnose::diagnosis_table(&outcomes).render();
            if outcomes.is_empty() {
                eprintln!("no reps detected in {}", file.display());
            }
            print!("{table}");
            if let Some(p) = out {
                std::fs::write(&p, &table).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Watch {
            source,
            no_pace,
            metrics_out,
        } => {
            let pipeline = load_pipeline(&cfg)?;
            let mut watch_cfg = cfg.watch.clone();
            watch_cfg.pace &= !no_pace;
            let reader: Box<dyn Read + Send> = if source == "-" {
                Box::new(std::io::stdin())
            } else {
                Box::new(File::open(&source).with_context(|| format!("opening {source}"))?)
            };
            println!("{}", diagnose::DIAGNOSIS_HEADER.join("\t"));
            let report = watch::watch(pipeline, cfg.online, &watch_cfg, reader, |o| {
                println!("{}", diagnose::diagnosis_row(o).join("\t"));
            });
            if report.metrics.rep_count == 0 {
                eprintln!("no reps detected");
            }
            eprintln!("{}", report.metrics.summary());
            if let Some(p) = metrics_out {
                let json = serde_json::to_string_pretty(&report.metrics)?;
                std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(e) = report.error {
                return Err(e.into());
            }
        }
        Command::ExportPlots { file, out_dir } => {
            print_paths(&export::export_plots(&cfg, &file, &out_dir, exec)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
