//! Command-line entry point. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use counter_gnn_core::eval::evaluate;
use counter_gnn_core::importance::permutation_importance;
use counter_gnn_core::tracking::Gender;
use counter_gnn_core::whatif::{
    joint_whatif, rank_players_by_leverage, sweep_rotations, FrameModel, Rotation, DEFAULT_STEP,
};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::io::dataset::{load_dataset, save_dataset};
use crate::io::frames::{load_labeled_frames, save_labeled_frames};
use crate::io::weights::{load_weights, save_weights};
use crate::io::write_json;
use crate::pipeline::{self, GenderSelection};

#[derive(Debug, Parser)]
#[command(name = "counter-gnn", version, about = "Counterattack success modelling on tracking data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Pipeline configuration (TOML, or JSON for `.json` files).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic matches with oracle labels.
    Gen {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides `synth.n_matches`.
        #[arg(long)]
        matches: Option<usize>,
    },
    /// Detect counterattacks and write labeled frames.
    Detect {
        #[command(flatten)]
        config: ConfigArg,
        /// Manifest written by `gen`; replaces --tracking/--events.
        #[arg(long, conflicts_with_all = ["tracking", "events"])]
        manifest: Option<PathBuf>,
        #[arg(long, requires = "events")]
        tracking: Option<PathBuf>,
        #[arg(long, requires = "tracking")]
        events: Option<PathBuf>,
        #[arg(long, value_parser = parse_gender)]
        gender: Option<Gender>,
        /// Defaults to the tracking file stem.
        #[arg(long)]
        match_id: Option<String>,
        /// Labeled-frame JSONL.
        #[arg(long)]
        out: PathBuf,
        /// Sequence summary JSON; defaults to `<out>.summary.json`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Convert labeled frames to a graph dataset.
    BuildGraphs {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Append the gender node feature.
        #[arg(long)]
        gender_aware: bool,
    },
    /// Train a model on one gender or both.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        gender: GenderSelection,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `train.epochs`.
        #[arg(long)]
        epochs: Option<usize>,
        /// Write the held-out split here.
        #[arg(long)]
        test_out: Option<PathBuf>,
        /// Training report JSON; defaults to `<out>.train.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Log-loss, ROC-AUC, ECE and calibration bins.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = counter_gnn_core::eval::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Permutation feature importance by role.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = counter_gnn_core::importance::DEFAULT_REPEATS)]
        repeats: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rotate players' run directions in one frame and re-predict.
    Whatif {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        model: PathBuf,
        /// Labeled-frame JSONL.
        #[arg(long)]
        frames: PathBuf,
        /// Zero-based line among the frames.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Sweep this player's direction.
        #[arg(long, conflicts_with_all = ["rotate", "rank"])]
        player: Option<String>,
        /// Joint rotation `player_id=degrees`; repeatable.
        #[arg(long, value_parser = parse_rotation, conflicts_with = "rank")]
        rotate: Vec<Rotation>,
        /// Rank every player by best achievable improvement.
        #[arg(long)]
        rank: bool,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train women, men and combined models and report them side by side.
    Experiment {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_gender(s: &str) -> std::result::Result<Gender, String> {
    Gender::parse(s).ok_or_else(|| format!("expected `women` or `men`, got `{s}`"))
}

fn parse_rotation(s: &str) -> std::result::Result<Rotation, String> {
    let (id, deg) = s
        .rsplit_once('=')
        .ok_or_else(|| format!("expected `player_id=degrees`, got `{s}`"))?;
    let degrees: f64 = deg.parse().map_err(|e| format!("degrees `{deg}`: {e}"))?;
    Ok(Rotation {
        player_id: id.to_string(),
        degrees,
    })
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::format("<stdout>", e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    gender: &'a str,
    seed: u64,
    n_train: usize,
    n_test: usize,
    config: counter_gnn_core::gnn::TrainConfig,
    epoch_losses: &'a [f64],
}

#[derive(Serialize)]
struct EvaluateReport {
    model: counter_gnn_core::eval::MetricsReport,
    naive: counter_gnn_core::eval::MetricsReport,
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            config,
            seed,
            out,
            matches,
        } => {
            let mut c = PipelineConfig::load_or_default(config.config.as_deref())?;
            if let Some(n) = matches {
                c.synth.n_matches = n;
            }
            let m = pipeline::gen_synthetic(&c, seed, &out)?;
            println!("wrote {} matches to {}", m.matches.len(), out.display());
        }
        Command::Detect {
            config,
            manifest,
            tracking,
            events,
            gender,
            match_id,
            out,
            summary,
        } => {
            let c = PipelineConfig::load_or_default(config.config.as_deref())?;
            let result = match (manifest, tracking, events) {
                (Some(m), _, _) => pipeline::detect_manifest(&m, &c)?,
                (None, Some(t), Some(e)) => {
                    let gender = gender.ok_or_else(|| Error::Config("--gender is required with --tracking".into()))?;
                    let id = match_id.unwrap_or_else(|| {
                        t.file_stem().map_or_else(|| "match".into(), |s| s.to_string_lossy().into_owned())
                    });
                    let m = pipeline::load_match(&t, &e, &id, gender, c.pitch)?;
                    pipeline::detect_matches(&[m], &c)?
                }
                _ => return Err(Error::Config("give --manifest or both --tracking and --events".into())),
            };
            save_labeled_frames(&out, &result.frames)?;
            write_json(&summary.unwrap_or_else(|| suffixed(&out, ".summary.json")), &result.report)?;
            let s = &result.report.summary;
            println!(
                "{} sequences ({} successful), {} labeled frames",
                s.n_sequences, s.n_success, result.report.n_frames
            );
        }
        Command::BuildGraphs {
            config,
            frames,
            out,
            gender_aware,
        } => {
            let c = PipelineConfig::load_or_default(config.config.as_deref())?;
            let options = counter_gnn_core::graph::GraphOptions {
                gender_aware: gender_aware || c.graph.gender_aware,
            };
            let labeled = load_labeled_frames(&frames, &c.pitch)?;
            let ds = pipeline::build_graphs(&labeled, &c.pitch, options, &frames.display().to_string());
            save_dataset(&out, &ds)?;
            println!("wrote {} graphs of width {}", ds.len(), ds.node_width());
        }
        Command::Train {
            config,
            dataset,
            gender,
            seed,
            out,
            epochs,
            test_out,
            report,
        } => {
            let c = PipelineConfig::load_or_default(config.config.as_deref())?;
            let ds = load_dataset(&dataset)?;
            let outcome = pipeline::train_selection(&ds, gender, &c, epochs.unwrap_or(c.train.epochs), seed)?;
            save_weights(&out, &outcome.report.params)?;
            if let Some(t) = test_out {
                save_dataset(&t, &outcome.test)?;
            }
            let r = &outcome.report;
            write_json(
                &report.unwrap_or_else(|| suffixed(&out, ".train.json")),
                &TrainSummary {
                    gender: gender.as_str(),
                    seed,
                    n_train: outcome.train.len(),
                    n_test: outcome.test.len(),
                    config: r.config,
                    epoch_losses: &r.epoch_losses,
                },
            )?;
            println!(
                "trained {} epochs on {} frames; final loss {:.4}",
                r.epoch_losses.len(),
                outcome.train.len(),
                r.epoch_losses.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Evaluate {
            model,
            dataset,
            bins,
            out,
        } => {
            let (params, _) = load_weights(&model)?;
            let ds = load_dataset(&dataset)?;
            pipeline::ensure_width(&params, &ds)?;
            let m = evaluate(&params, &ds.samples, bins)?;
            let naive = counter_gnn_core::eval::naive_baseline(&ds.labels(), bins)?;
            println!("log-loss {:.4}  ROC-AUC {:.4}  ECE {:.4}", m.log_loss, m.roc_auc, m.ece);
            write_json(&out, &EvaluateReport { model: m, naive })?;
        }
        Command::Importance {
            model,
            dataset,
            repeats,
            seed,
            out,
        } => {
            let (params, _) = load_weights(&model)?;
            let ds = load_dataset(&dataset)?;
            pipeline::ensure_width(&params, &ds)?;
            let report = permutation_importance(&params, &ds.samples, repeats, seed)?;
            if let Some(top) = report.rows.first() {
                println!("top feature: {} ({}) ΔAUC {:.4}", top.feature, top.role.as_str(), top.mean_delta_auc);
            }
            write_json(&out, &report)?;
        }
        Command::Whatif {
            config,
            model,
            frames,
            index,
            player,
            rotate,
            rank,
            step,
            out,
        } => {
            let c = PipelineConfig::load_or_default(config.config.as_deref())?;
            let (params, _) = load_weights(&model)?;
            let labeled = load_labeled_frames(&frames, &c.pitch)?;
            let frame = labeled.get(index).ok_or_else(|| {
                Error::format(&frames, format!("frame index {index} out of range ({} frames)", labeled.len()))
            })?;
            let fm = FrameModel {
                params: &params,
                pitch: c.pitch,
                options: pipeline::graph_options_for(params.dims())?,
            };
            if rank {
                emit(out.as_deref(), &rank_players_by_leverage(&fm, frame, step)?)?;
            } else if let Some(p) = player {
                emit(out.as_deref(), &sweep_rotations(&fm, frame, &p, step)?)?;
            } else {
                emit(out.as_deref(), &joint_whatif(&fm, frame, &rotate)?)?;
            }
        }
        Command::Serve { config } => {
            let c = PipelineConfig::load(&config)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            runtime.block_on(crate::service::serve(c.service, c.pitch))?;
        }
        Command::Experiment {
            config,
            dataset,
            seed,
            out,
        } => {
            let c = PipelineConfig::load_or_default(config.config.as_deref())?;
            let ds = load_dataset(&dataset)?;
            let report = pipeline::run_experiment(&ds, &c, seed, |partial| write_json(&out, partial))?;
            println!("{:<10} {:>9} {:>8} {:>7}", "model", "log-loss", "ROC-AUC", "ECE");
            for r in &report.rows {
                println!("{:<10} {:>9.4} {:>8.4} {:>7.4}", r.model, r.log_loss, r.roc_auc, r.ece);
            }
        }
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 1,
        Error::Core(counter_gnn_core::Error::InvalidConfig(_)) => 1,
        _ => 2,
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
