use std::path::PathBuf;

use causalcast::augment::TsMixupConfig;
use causalcast::chronoslite::ForecastConfig;
use causalcast::citest::CiTestKind;
use causalcast::discovery::DiscoveryConfig;
use causalcast::panel::Frequency;
use serde::{Deserialize, Serialize};

/// Everything that determines a run's output. Loaded from `--config` (JSON),
/// then overridden by command-line flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub date_column: Option<String>,
    pub frequency: Frequency,
    /// Average a monthly file into quarters before analysis.
    pub aggregate: bool,
    pub start: Option<String>,
    pub end: Option<String>,
    pub variables: Vec<String>,
    pub scale: bool,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub citest: CitestSettings,
    pub discovery: DiscoveryConfig,
    pub forecast: ForecastSettings,
    pub evaluation: EvaluationSettings,
    pub augment: AugmentSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            date_column: None,
            frequency: Frequency::Quarterly,
            aggregate: false,
            start: None,
            end: None,
            variables: Vec::new(),
            scale: true,
            seed: 0,
            out: PathBuf::from("out"),
            citest: CitestSettings::default(),
            discovery: DiscoveryConfig::default(),
            forecast: ForecastSettings::default(),
            evaluation: EvaluationSettings::default(),
            augment: AugmentSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CitestSettings {
    pub x: Option<String>,
    pub y: Option<String>,
    pub z: Vec<String>,
    pub test: CiTestKind,
    pub n_perm: usize,
}

impl Default for CitestSettings {
    fn default() -> Self {
        CitestSettings { x: None, y: None, z: Vec::new(), test: CiTestKind::Parcorr, n_perm: 199 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastSettings {
    pub var: Option<String>,
    /// KernelSynth series added to the training corpus.
    pub synthetic: usize,
    pub synthetic_len: usize,
    pub synthetic_max_terms: usize,
    #[serde(flatten)]
    pub model: ForecastConfig,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        ForecastSettings {
            var: None,
            synthetic: 0,
            synthetic_len: 256,
            synthetic_max_terms: 5,
            model: ForecastConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub bundles: Option<PathBuf>,
    pub actuals: Option<PathBuf>,
    pub var: Option<String>,
    pub level: f64,
    pub alpha: f64,
    /// Per-horizon success counts; evaluates counts only, no bundles needed.
    pub counts: Option<Vec<usize>>,
    pub n: Option<usize>,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings { bundles: None, actuals: None, var: None, level: 0.9, alpha: 0.05, counts: None, n: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    Tsmixup,
    Kernelsynth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSettings {
    pub mode: AugmentMode,
    pub n: usize,
    pub length: usize,
    pub max_terms: usize,
    pub tsmixup: TsMixupConfig,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            mode: AugmentMode::Kernelsynth,
            n: 10,
            length: 256,
            max_terms: 5,
            tsmixup: TsMixupConfig::default(),
        }
    }
}
