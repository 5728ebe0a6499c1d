//! Pipeline stages shared by the CLI, the service and the tests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use counter_gnn_core::detector::{
    detect_counterattacks, label_frames, summary_stats, CounterattackSequence, CounterattackSummary,
    LabeledFrame,
};
use counter_gnn_core::eval::{evaluate, naive_baseline, MetricsReport};
use counter_gnn_core::gnn::{train, ModelDims, ModelParams, TrainReport};
use counter_gnn_core::graph::{
    filter_gender, split_balanced, GraphDataset, GraphOptions, GraphSample, NODE_FEATURE_NAMES,
};
use counter_gnn_core::synth::{generate_synthetic_match, OracleSequence, SignalProfile, SynthConfig};
use counter_gnn_core::tracking::{synchronize, EventKind, Gender, PitchSpec, SyncedMatch};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SynthSettings};
use crate::error::{Error, Result};
use crate::io::{events, read_json, read_jsonl, tracking, write_json, write_jsonl};

pub const MANIFEST_VERSION: u32 = 1;
pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

/// Seed for the `k`-th item derived from a run seed.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub match_id: String,
    pub gender: Gender,
    /// Relative to the manifest's directory.
    pub tracking: PathBuf,
    pub events: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub pitch: PitchSpec,
    pub matches: Vec<MatchEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLine {
    pub match_id: String,
    pub gender: Gender,
    #[serde(flatten)]
    pub sequence: OracleSequence,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ORACLE_FILE: &str = "oracle.jsonl";

fn synth_config(s: &SynthSettings, k: usize, pitch: PitchSpec) -> SynthConfig {
    let gender = s.genders[k % s.genders.len()];
    let signal = if s.attacker_vx_only {
        SignalProfile::attacker_vx_only()
    } else {
        SignalProfile::default()
    };
    let config = SynthConfig {
        match_id: format!("m{k:03}"),
        gender,
        n_sequences: s.sequences_per_match,
        frames_per_sequence: s.frames_per_sequence,
        success_rate: s.success_rate,
        signal_strength: s.signal_strength,
        signal,
        missing_player_rate: s.missing_player_rate,
        pitch,
        ..SynthConfig::default()
    };
    if s.gender_shift {
        config.with_gender_shift()
    } else {
        config
    }
}

/// Generate matches in memory, with their oracle sequences.
pub fn generate_matches(config: &PipelineConfig, seed: u64) -> Result<Vec<(SyncedMatch, Vec<OracleSequence>)>> {
    (0..config.synth.n_matches)
        .map(|k| {
            let c = synth_config(&config.synth, k, config.pitch);
            let m = generate_synthetic_match(&c, derive_seed(seed, k as u64))?;
            Ok((m.matched, m.oracle))
        })
        .collect()
}

/// Write tracking and event files per match, the oracle labels and a manifest.
pub fn gen_synthetic(config: &PipelineConfig, seed: u64, out: &Path) -> Result<Manifest> {
    let matches = generate_matches(config, seed)?;
    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        seed,
        pitch: config.pitch,
        matches: Vec::with_capacity(matches.len()),
    };
    let mut oracle = Vec::new();
    for (m, seqs) in &matches {
        let entry = MatchEntry {
            match_id: m.match_id.clone(),
            gender: m.gender,
            tracking: format!("{}.tracking.jsonl", m.match_id).into(),
            events: format!("{}.events.jsonl", m.match_id).into(),
        };
        tracking::save_tracking(&out.join(&entry.tracking), &m.frames)?;
        let evs: Vec<_> = m.events.iter().map(|e| e.event.clone()).collect();
        events::save_events(&out.join(&entry.events), &evs)?;
        oracle.extend(seqs.iter().map(|s| OracleLine {
            match_id: m.match_id.clone(),
            gender: m.gender,
            sequence: s.clone(),
        }));
        manifest.matches.push(entry);
    }
    write_jsonl(&out.join(ORACLE_FILE), &oracle)?;
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let m: Manifest = read_json(path)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: m.version,
            expected: MANIFEST_VERSION,
        });
    }
    Ok(m)
}

pub fn load_oracle(path: &Path) -> Result<Vec<OracleLine>> {
    read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub summary: CounterattackSummary,
    pub sequences: Vec<CounterattackSequence>,
    pub n_frames: usize,
    /// Events farther than the sync tolerance from any frame.
    pub dropped_events: usize,
    /// Events whose kind was not recognised.
    pub unknown_event_kinds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectOutput {
    pub frames: Vec<LabeledFrame>,
    pub report: DetectReport,
}

/// Load, synchronize and detect one match.
pub fn load_match(
    tracking_path: &Path,
    events_path: &Path,
    match_id: &str,
    gender: Gender,
    pitch: PitchSpec,
) -> Result<(SyncedMatch, usize)> {
    let frames = tracking::load_tracking(tracking_path, &pitch)?;
    let loaded = events::load_events(events_path)?;
    let m = synchronize(match_id, frames, loaded.events, gender, pitch)?;
    Ok((m, loaded.unknown_kinds))
}

/// Detect over several matches and pool the results.
pub fn detect_matches(matches: &[(SyncedMatch, usize)], config: &PipelineConfig) -> Result<DetectOutput> {
    let mut frames = Vec::new();
    let mut sequences = Vec::new();
    let mut summary = CounterattackSummary::default();
    let mut dropped = 0;
    let mut unknown = 0;
    for (m, unknown_kinds) in matches {
        let seqs = detect_counterattacks(m, &config.detector)?;
        frames.extend(label_frames(m, &seqs));
        let shots: Vec<_> = m
            .events
            .iter()
            .filter(|e| e.event.kind == EventKind::Shot)
            .map(|e| e.event.clone())
            .collect();
        let s = summary_stats(&seqs, &shots);
        summary.n_sequences += s.n_sequences;
        summary.n_success += s.n_success;
        summary.n_shots += s.n_shots;
        summary.n_shots_in_sequences += s.n_shots_in_sequences;
        dropped += m.dropped_events;
        unknown += unknown_kinds;
        sequences.extend(seqs);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    summary.success_rate = ratio(summary.n_success, summary.n_sequences);
    summary.shot_share = ratio(summary.n_shots_in_sequences, summary.n_shots);
    Ok(DetectOutput {
        report: DetectReport {
            summary,
            sequences,
            n_frames: frames.len(),
            dropped_events: dropped,
            unknown_event_kinds: unknown,
        },
        frames,
    })
}

/// Detect over every match listed in a manifest.
pub fn detect_manifest(manifest_path: &Path, config: &PipelineConfig) -> Result<DetectOutput> {
    let manifest = load_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let matches = manifest
        .matches
        .iter()
        .map(|e| load_match(&dir.join(&e.tracking), &dir.join(&e.events), &e.match_id, e.gender, config.pitch))
        .collect::<Result<Vec<_>>>()?;
    detect_matches(&matches, config)
}

/// Share of oracle sequences whose opening event starts a detected sequence
/// with the same label in the same match.
pub fn oracle_recall(oracle: &[OracleLine], detected: &[CounterattackSequence]) -> f64 {
    if oracle.is_empty() {
        return 1.0;
    }
    let found: BTreeSet<_> = detected
        .iter()
        .map(|s| (s.match_id.as_str(), s.start_event_id, s.label.as_u8()))
        .collect();
    let hits = oracle
        .iter()
        .filter(|o| found.contains(&(o.match_id.as_str(), o.sequence.start_event_id, o.sequence.label.as_u8())))
        .count();
    hits as f64 / oracle.len() as f64
}

pub fn build_graphs(frames: &[LabeledFrame], pitch: &PitchSpec, options: GraphOptions, source: &str) -> GraphDataset {
    GraphDataset::from_frames(frames, pitch, options, source)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenderSelection {
    Women,
    Men,
    Combined,
}

impl GenderSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            GenderSelection::Women => "women",
            GenderSelection::Men => "men",
            GenderSelection::Combined => "combined",
        }
    }

    fn genders(self) -> &'static [Gender] {
        match self {
            GenderSelection::Women => &[Gender::Women],
            GenderSelection::Men => &[Gender::Men],
            GenderSelection::Combined => &[Gender::Women, Gender::Men],
        }
    }
}

fn merge(parts: Vec<GraphDataset>, template: &GraphDataset) -> Result<GraphDataset> {
    let samples = parts.into_iter().flat_map(|d| d.samples).collect();
    Ok(GraphDataset::new(samples, template.feature_names.clone(), template.source.clone())?)
}

/// Balanced train/test split of the selected genders. Each gender is split
/// on its own, so the combined split is the union of the per-gender splits
/// and every model is tested on the same held-out sequences.
pub fn split_selection(
    dataset: &GraphDataset,
    selection: GenderSelection,
    train_fraction: f64,
    seed: u64,
) -> Result<(GraphDataset, GraphDataset)> {
    let mut trains = Vec::new();
    let mut tests = Vec::new();
    for &g in selection.genders() {
        let subset = filter_gender(dataset, g);
        if subset.is_empty() && selection == GenderSelection::Combined {
            continue;
        }
        if subset.is_empty() {
            return Err(counter_gnn_core::Error::Empty("no frames for the selected gender").into());
        }
        let (tr, te) = split_balanced(&subset, train_fraction, seed)?;
        trains.push(tr);
        tests.push(te);
    }
    if trains.is_empty() {
        return Err(counter_gnn_core::Error::Empty("dataset has no frames").into());
    }
    Ok((merge(trains, dataset)?, merge(tests, dataset)?))
}

/// The graph options a model with `dims` was trained with.
pub fn graph_options_for(dims: ModelDims) -> Result<GraphOptions> {
    let base = NODE_FEATURE_NAMES.len();
    match dims.node_width {
        w if w == base => Ok(GraphOptions { gender_aware: false }),
        w if w == base + 1 => Ok(GraphOptions { gender_aware: true }),
        w => Err(counter_gnn_core::Error::WidthMismatch {
            expected: base,
            found: w,
        }
        .into()),
    }
}

/// Fail with an explicit width error when a dataset does not fit a model.
pub fn ensure_width(params: &ModelParams, dataset: &GraphDataset) -> Result<()> {
    let expected = params.dims().node_width;
    if dataset.node_width() != expected {
        return Err(counter_gnn_core::Error::WidthMismatch {
            expected,
            found: dataset.node_width(),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub train: GraphDataset,
    pub test: GraphDataset,
}

/// Split, then train on the training side with `epochs` and `seed`.
pub fn train_selection(
    dataset: &GraphDataset,
    selection: GenderSelection,
    config: &PipelineConfig,
    epochs: usize,
    seed: u64,
) -> Result<TrainOutcome> {
    let (tr, te) = split_selection(dataset, selection, config.split.train_fraction, seed)?;
    let tc = counter_gnn_core::gnn::TrainConfig {
        epochs,
        seed,
        ..config.train
    };
    let report = train(&tr.samples, &tc)?;
    Ok(TrainOutcome {
        report,
        train: tr,
        test: te,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub model: String,
    pub epochs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub log_loss: f64,
    pub roc_auc: f64,
    pub ece: f64,
}

/// A model scored on one gender's held-out frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRow {
    pub model: String,
    pub test_gender: Gender,
    pub n_test: usize,
    pub log_loss: f64,
    pub roc_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub seed: u64,
    /// One row per trained model on its own test split, then the naive row.
    pub rows: Vec<ExperimentRow>,
    pub cross: Vec<CrossRow>,
}

impl ExperimentReport {
    pub fn row(&self, model: &str) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn cross(&self, model: &str, gender: Gender) -> Option<&CrossRow> {
        self.cross.iter().find(|r| r.model == model && r.test_gender == gender)
    }
}

fn row(model: &str, epochs: usize, n_train: usize, m: &MetricsReport) -> ExperimentRow {
    ExperimentRow {
        model: model.to_string(),
        epochs,
        n_train,
        n_test: m.n_samples,
        log_loss: m.log_loss,
        roc_auc: m.roc_auc,
        ece: m.ece,
    }
}

/// Train women, men and combined models, score each on its own test split
/// and on each gender's split, and add the naive row. `flush` sees the
/// report after every model so partial results survive a later failure.
pub fn run_experiment(
    dataset: &GraphDataset,
    config: &PipelineConfig,
    seed: u64,
    mut flush: impl FnMut(&ExperimentReport) -> Result<()>,
) -> Result<ExperimentReport> {
    let bins = config.eval.bins;
    let mut report = ExperimentReport {
        schema_version: EXPERIMENT_SCHEMA_VERSION,
        seed,
        rows: Vec::new(),
        cross: Vec::new(),
    };
    let e = config.experiment;
    let mut tests: Vec<(Gender, Vec<GraphSample>)> = Vec::new();
    for (sel, epochs) in [
        (GenderSelection::Women, e.women_epochs),
        (GenderSelection::Men, e.men_epochs),
        (GenderSelection::Combined, e.combined_epochs),
    ] {
        let out = train_selection(dataset, sel, config, epochs, seed)?;
        let params = &out.report.params;
        let m = evaluate(params, &out.test.samples, bins)?;
        report.rows.push(row(sel.as_str(), epochs, out.train.len(), &m));
        match sel {
            GenderSelection::Women => tests.push((Gender::Women, out.test.samples)),
            GenderSelection::Men => tests.push((Gender::Men, out.test.samples)),
            GenderSelection::Combined => {}
        }
        for (g, test) in &tests {
            let m = evaluate(params, test, bins)?;
            report.cross.push(CrossRow {
                model: sel.as_str().to_string(),
                test_gender: *g,
                n_test: m.n_samples,
                log_loss: m.log_loss,
                roc_auc: m.roc_auc,
            });
        }
        flush(&report)?;
    }
    let labels: Vec<u8> = tests.iter().flat_map(|(_, t)| t.iter().map(|s| s.label)).collect();
    report.rows.push(row("naive", 0, 0, &naive_baseline(&labels, bins)?));
    flush(&report)?;
    Ok(report)
}
