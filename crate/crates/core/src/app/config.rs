//! Run configuration: a JSON file of overrides on top of a preset.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bispectrum::Scaling;
use crate::classifier::TrainConfig;
use crate::error::{Error, Result};
use crate::experiments::{log_spaced, DatasetManifest};
use crate::signal::default_profiles;
use crate::voting::{MarginalVariant, Rule, StoppingConfig};

/// Scale of the defaults a configuration starts from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Small enough to build and train in seconds.
    #[default]
    Desk,
    /// 16 emitters, 11 SNR levels, 1120-point windows, 224-pixel images.
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected desk or paper)"
            ))),
        }
    }
}

/// Where sweep votes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoterKind {
    Perfect,
    /// Correct with probability `confusion_accuracy`, otherwise a uniform rival.
    Confusion,
    /// The trained model voting on test-split images.
    Model,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub preset: Preset,
    /// Root seed; every random stream of a run derives from it.
    pub seed: u64,

    pub num_emitters: usize,
    pub snr_levels_db: Vec<f64>,
    pub runs_per_setup: usize,
    pub samples_per_case: usize,
    pub subsample_length: usize,
    pub block: usize,
    pub scaling: Scaling,
    pub signal_length: usize,

    pub acceptable_error: f64,
    pub rule: Rule,
    pub marginal: MarginalVariant,
    pub max_votes: u64,

    /// `train.seed` is replaced by the root seed.
    pub train: TrainConfig,

    pub generate_snr_db: f64,

    pub voter: VoterKind,
    pub confusion_accuracy: f64,
    pub confusion_classes: usize,
    pub sweep_cases: usize,
    pub sweep_thresholds: Vec<f64>,
    pub sweep_trials: u64,
    pub certainty_thresholds: Vec<f64>,
}

impl Config {
    pub fn preset(preset: Preset) -> Self {
        let m = match preset {
            Preset::Desk => DatasetManifest::desk(0),
            Preset::Paper => DatasetManifest::paper(0),
        };
        Config {
            preset,
            seed: 0,
            num_emitters: m.emitters.len(),
            snr_levels_db: m.snr_levels_db,
            runs_per_setup: m.runs_per_setup,
            samples_per_case: m.samples_per_case,
            subsample_length: m.subsample_length,
            block: m.block,
            scaling: m.scaling,
            signal_length: m.signal_length,
            acceptable_error: 1e-3,
            rule: Rule::Preponderance,
            marginal: MarginalVariant::MergedRivals,
            max_votes: crate::voting::DEFAULT_MAX_VOTES,
            train: TrainConfig::default(),
            generate_snr_db: 20.0,
            voter: VoterKind::Confusion,
            confusion_accuracy: 0.82,
            confusion_classes: 16,
            sweep_cases: 352,
            sweep_thresholds: vec![0.3, 0.1, 0.03, 0.01, 0.003, 0.001],
            sweep_trials: 10_000,
            certainty_thresholds: log_spaced(1e-12, 1e-1, 12),
        }
    }

    pub fn image_side(&self) -> usize {
        self.subsample_length / self.block
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            emitters: default_profiles(self.num_emitters),
            snr_levels_db: self.snr_levels_db.clone(),
            runs_per_setup: self.runs_per_setup,
            samples_per_case: self.samples_per_case,
            subsample_length: self.subsample_length,
            block: self.block,
            scaling: self.scaling,
            seed: self.seed,
            signal_length: self.signal_length,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn stopping(&self) -> Result<StoppingConfig> {
        Ok(StoppingConfig::new(self.acceptable_error, self.rule)
            .map_err(|e| Error::Config(format!("acceptable_error: {e}")))?
            .with_max_votes(self.max_votes)
            .with_marginal(self.marginal))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        if !(self.acceptable_error > 0.0 && self.acceptable_error < 0.5) {
            return bad(
                "acceptable_error",
                format!("must be in (0, 0.5), got {}", self.acceptable_error),
            );
        }
        if self.max_votes == 0 {
            return bad("max_votes", "must be at least 1".into());
        }
        for (field, list) in [
            ("sweep_thresholds", &self.sweep_thresholds),
            ("certainty_thresholds", &self.certainty_thresholds),
        ] {
            if list.is_empty() {
                return bad(field, "must not be empty".into());
            }
            if let Some(t) = list.iter().find(|t| !(**t > 0.0 && **t < 0.5)) {
                return bad(
                    field,
                    format!("every threshold must be in (0, 0.5), got {t}"),
                );
            }
        }
        if self.sweep_trials == 0 {
            return bad("sweep_trials", "must be at least 1".into());
        }
        if self.sweep_cases == 0 {
            return bad("sweep_cases", "must be at least 1".into());
        }
        if !(self.confusion_accuracy > 0.0 && self.confusion_accuracy <= 1.0) {
            return bad(
                "confusion_accuracy",
                format!("must be in (0, 1], got {}", self.confusion_accuracy),
            );
        }
        if self.confusion_classes < 2 {
            return bad("confusion_classes", "must be at least 2".into());
        }
        if self.generate_snr_db.is_nan() {
            return bad("generate_snr_db", "must be a number".into());
        }
        if self.train.pooling == 0 || !self.image_side().is_multiple_of(self.train.pooling) {
            return bad(
                "train.pooling",
                format!(
                    "{} does not divide the image side {}",
                    self.train.pooling,
                    self.image_side()
                ),
            );
        }
        if self.train.learning_rate.is_nan()
            || self.train.learning_rate <= 0.0
            || self.train.batch_size == 0
        {
            return bad(
                "train",
                "learning_rate and batch_size must be positive".into(),
            );
        }
        self.manifest().validate().map_err(|e| {
            Error::Config(
                e.to_string()
                    .trim_start_matches("invalid argument: ")
                    .into(),
            )
        })
    }
}

/// Keys a configuration file may set; absent keys keep the preset value.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    preset: Option<Preset>,
    seed: Option<u64>,
    num_emitters: Option<usize>,
    snr_levels_db: Option<Vec<f64>>,
    runs_per_setup: Option<usize>,
    samples_per_case: Option<usize>,
    subsample_length: Option<usize>,
    block: Option<usize>,
    scaling: Option<Scaling>,
    signal_length: Option<usize>,
    acceptable_error: Option<f64>,
    rule: Option<Rule>,
    marginal: Option<MarginalVariant>,
    max_votes: Option<u64>,
    train: Option<TrainConfig>,
    generate_snr_db: Option<f64>,
    voter: Option<VoterKind>,
    confusion_accuracy: Option<f64>,
    confusion_classes: Option<usize>,
    sweep_cases: Option<usize>,
    sweep_thresholds: Option<Vec<f64>>,
    sweep_trials: Option<u64>,
    certainty_thresholds: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $( if let Some(v) = $o.$f { $cfg.$f = v; } )*
    };
}

impl Overrides {
    fn resolve(self, preset: Option<Preset>) -> Config {
        let mut cfg = Config::preset(preset.or(self.preset).unwrap_or_default());
        let o = self;
        overlay!(
            cfg,
            o,
            seed,
            num_emitters,
            snr_levels_db,
            runs_per_setup,
            samples_per_case,
            subsample_length,
            block,
            scaling,
            signal_length,
            acceptable_error,
            rule,
            marginal,
            max_votes,
            train,
            generate_snr_db,
            voter,
            confusion_accuracy,
            confusion_classes,
            sweep_cases,
            sweep_thresholds,
            sweep_trials,
            certainty_thresholds
        );
        cfg
    }
}

/// Parses configuration text. `preset` takes precedence over the file's own
/// `preset` key.
pub fn parse_config_str(text: &str, preset: Option<Preset>) -> Result<Config> {
    let o: Overrides = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let cfg = o.resolve(preset);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, None).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
