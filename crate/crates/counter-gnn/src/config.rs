//! Pipeline configuration, read from TOML or JSON (by file extension).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use counter_gnn_core::detector::DetectorConfig;
use counter_gnn_core::gnn::TrainConfig;
use counter_gnn_core::graph::GraphOptions;
use counter_gnn_core::tracking::{Gender, PitchSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub pitch: PitchSpec,
    pub detector: DetectorConfig,
    pub graph: GraphOptions,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub eval: EvalConfig,
    pub synth: SynthSettings,
    pub experiment: ExperimentConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bins: usize,
    pub importance_repeats: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bins: counter_gnn_core::eval::DEFAULT_BINS,
            importance_repeats: counter_gnn_core::importance::DEFAULT_REPEATS,
        }
    }
}

/// Settings for `gen`: how many matches to generate and their shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub n_matches: usize,
    /// Genders assigned to matches in rotation.
    pub genders: Vec<Gender>,
    pub sequences_per_match: usize,
    pub frames_per_sequence: usize,
    pub success_rate: f64,
    pub signal_strength: f64,
    /// Make the signal point in opposite directions for women's and men's
    /// matches (see `SynthConfig::with_gender_shift`).
    pub gender_shift: bool,
    /// Only attackers' velocity carries signal; defenders are not displaced.
    pub attacker_vx_only: bool,
    pub missing_player_rate: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            n_matches: 4,
            genders: vec![Gender::Women, Gender::Men],
            sequences_per_match: 100,
            frames_per_sequence: 5,
            success_rate: 0.5,
            signal_strength: 1.0,
            gender_shift: false,
            attacker_vx_only: false,
            missing_player_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub women_epochs: usize,
    pub men_epochs: usize,
    pub combined_epochs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            women_epochs: 100,
            men_epochs: 200,
            combined_epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Model name → weight file.
    pub models: BTreeMap<String, PathBuf>,
    /// Dataset name → labeled-frame JSONL, served by `/frames`.
    pub datasets: BTreeMap<String, PathBuf>,
    /// Model name → importance report JSON, served by `/importance`.
    pub importance: BTreeMap<String, PathBuf>,
    pub max_body_bytes: usize,
    pub max_frames_per_page: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            models: BTreeMap::new(),
            datasets: BTreeMap::new(),
            importance: BTreeMap::new(),
            max_body_bytes: 1 << 20,
            max_frames_per_page: 500,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        self.detector.validate()?;
        self.train.validate()?;
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("split.train_fraction must lie in (0, 1), got {f}")));
        }
        if self.eval.bins == 0 || self.eval.importance_repeats == 0 {
            return Err(Error::Config("eval.bins and eval.importance_repeats must be positive".into()));
        }
        if self.synth.genders.is_empty() {
            return Err(Error::Config("synth.genders must not be empty".into()));
        }
        let e = &self.experiment;
        if e.women_epochs == 0 || e.men_epochs == 0 || e.combined_epochs == 0 {
            return Err(Error::Config("experiment epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let config: PipelineConfig = if json {
            crate::io::parse_json(text).map_err(|(field, msg)| match field {
                Some(f) => Error::Config(format!("{f}: {msg}")),
                None => Error::Config(msg),
            })?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    /// `.json` files are JSON; anything else is TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The configuration file, or defaults when none is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
