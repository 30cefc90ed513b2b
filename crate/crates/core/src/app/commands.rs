//! The work behind each subcommand. Every command writes its outputs under
//! an output directory together with a `<command>.run.json` record of the
//! resolved configuration and root seed.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Config, VoterKind};
use crate::bispectrum::featurize;
use crate::classifier::{
    read_model, train_softmax, write_model, Classifier, ConfusionVoter, FeatureSet, TrainReport,
};
use crate::error::{Error, Result};
use crate::experiments::{
    accuracy_sweep, build_dataset, certainty_sweep, load_dataset, persist_dataset, votes_fit,
    write_fit_csv, write_sweep_csv, DatasetVoter, FitResult, PerfectVoter, Split, SweepResult,
    Voter,
};
use crate::rng::{derive, Purpose};
use crate::signal::{
    extract_subsample, read_iq32, synthesize_emitter_signal, write_iq32, SubsampleSpec,
};
use crate::voting::{decide_sequential, Decision};

pub const DATASET_DIR: &str = "dataset";
pub const MODEL_FILE: &str = "model.smx";
pub const DECISION_FILE: &str = "decision.json";
pub const ACCURACY_CSV: &str = "accuracy_sweep.csv";
pub const CERTAINTY_CSV: &str = "certainty_sweep.csv";
pub const CERTAINTY_FIT_CSV: &str = "certainty_fit.csv";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    tool_version: &'a str,
    seed: u64,
    config: &'a Config,
}

/// Records the command, root seed and resolved configuration.
pub fn write_run_record(out: &Path, command: &str, cfg: &Config) -> Result<()> {
    ensure_dir(out)?;
    let record = RunRecord {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
    };
    write_json(&out.join(format!("{command}.run.json")), &record)
}

/// Seed of the stand-alone recording of emitter `e`. Distinct from every
/// dataset recording.
fn recording_seed(cfg: &Config, emitter: usize) -> u64 {
    derive(cfg.seed, Purpose::CaseSignal, u64::MAX, emitter as u64)
}

/// Synthesizes one recording per emitter (or just `only`) at
/// `generate_snr_db` and writes `emitter_<i>.iq32` files.
pub fn run_generate(cfg: &Config, out: &Path, only: Option<usize>) -> Result<Vec<PathBuf>> {
    let profiles = cfg.manifest().emitters;
    let which: Vec<usize> = match only {
        Some(e) if e >= profiles.len() => {
            return Err(Error::Config(format!(
                "emitter {e} out of range (configuration has {})",
                profiles.len()
            )))
        }
        Some(e) => vec![e],
        None => (0..profiles.len()).collect(),
    };
    write_run_record(out, "generate", cfg)?;
    which
        .into_iter()
        .map(|e| {
            let signal = synthesize_emitter_signal(
                &profiles[e],
                cfg.signal_length,
                cfg.generate_snr_db,
                recording_seed(cfg, e),
            )?;
            let path = out.join(format!("emitter_{e}.iq32"));
            write_iq32(&path, &signal)?;
            Ok(path)
        })
        .collect()
}

/// Builds the feature-image store under `out/dataset`.
pub fn run_featurize(cfg: &Config, out: &Path) -> Result<PathBuf> {
    write_run_record(out, "featurize", cfg)?;
    let ds = build_dataset(&cfg.manifest())?;
    let dir = out.join(DATASET_DIR);
    persist_dataset(&ds, &dir)?;
    Ok(dir)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub model_path: PathBuf,
    pub validation_accuracy: Vec<f64>,
    pub report: TrainReport,
}

/// Trains the softmax baseline on a stored dataset and writes `out/model.smx`
/// plus `out/train_report.json`.
pub fn run_train(cfg: &Config, dataset_dir: &Path, out: &Path) -> Result<TrainSummary> {
    write_run_record(out, "train", cfg)?;
    let ds = load_dataset(dataset_dir)?;
    let tc = cfg.train_config();
    let train = FeatureSet::from_images(&ds.labeled(Split::Train), tc.pooling)?;
    let val = FeatureSet::from_images(&ds.labeled(Split::Val), tc.pooling)?;
    let (model, report) = train_softmax(&train, &val, ds.manifest.emitters.len(), &tc)?;
    let model_path = out.join(MODEL_FILE);
    write_model(&model_path, &model)?;
    let summary = TrainSummary {
        seed: cfg.seed,
        model_path,
        validation_accuracy: model.validation_accuracy.clone(),
        report,
    };
    write_json(&out.join("train_report.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentifyReport {
    pub seed: u64,
    pub signal: PathBuf,
    pub model: PathBuf,
    pub acceptable_error: f64,
    /// Emitter id of the winning class under the configured profiles.
    pub winner_emitter_id: Option<u32>,
    pub decision: Decision,
}

impl std::fmt::Display for IdentifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = &self.decision;
        write!(
            f,
            "winner {} ({}) after {} votes, certainty {:.6e} under the {} rule at E = {}",
            d.winner,
            if d.conclusive {
                "conclusive"
            } else {
                "inconclusive"
            },
            d.votes_used,
            d.achieved_certainty,
            d.rule,
            self.acceptable_error
        )
    }
}

/// Identifies the emitter of a recorded signal: draws random windows,
/// featurizes and classifies each one, and votes until the stopping rule
/// fires. Writes `out/decision.json`.
pub fn run_identify(
    cfg: &Config,
    signal_path: &Path,
    model_path: &Path,
    out: &Path,
) -> Result<IdentifyReport> {
    let stopping = cfg.stopping()?;
    let model = read_model(model_path)?;
    let signal = read_iq32(signal_path)?;
    write_run_record(out, "identify", cfg)?;
    let spec = SubsampleSpec::new(
        cfg.subsample_length,
        derive(cfg.seed, Purpose::Subsample, u64::MAX, 0),
    );
    let failure = RefCell::new(None);
    let votes = (0u64..).map_while(|draw| {
        let vote = extract_subsample(&signal, &spec, draw)
            .and_then(|w| featurize(&w, cfg.block, cfg.scaling))
            .and_then(|img| model.classify(&img));
        match vote {
            Ok(v) => Some(v),
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                None
            }
        }
    });
    let decision = decide_sequential(votes, model.num_classes(), &stopping)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let report = IdentifyReport {
        seed: cfg.seed,
        signal: signal_path.to_path_buf(),
        model: model_path.to_path_buf(),
        acceptable_error: cfg.acceptable_error,
        winner_emitter_id: cfg
            .manifest()
            .emitters
            .get(decision.winner)
            .map(|p| p.emitter_id),
        decision,
    };
    write_json(&out.join(DECISION_FILE), &report)?;
    Ok(report)
}

/// Locations of the trained model and its dataset, needed by the model voter.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub dataset_dir: PathBuf,
    pub model_path: PathBuf,
}

fn build_voter(cfg: &Config, inputs: &ModelInputs) -> Result<(Box<dyn Voter>, Vec<usize>)> {
    Ok(match cfg.voter {
        VoterKind::Perfect => (
            Box::new(PerfectVoter {
                num_classes: cfg.confusion_classes,
            }),
            (0..cfg.sweep_cases).collect(),
        ),
        VoterKind::Confusion => {
            let seed = derive(cfg.seed, Purpose::Confusion, 0, 0);
            let voter =
                ConfusionVoter::uniform_rivals(cfg.confusion_classes, cfg.confusion_accuracy, seed)
                    .map_err(|e| Error::Config(format!("confusion voter: {e}")))?;
            (Box::new(voter), (0..cfg.sweep_cases).collect())
        }
        VoterKind::Model => {
            let model = read_model(&inputs.model_path)?;
            let ds = load_dataset(&inputs.dataset_dir)?;
            let voter = DatasetVoter::new(&model, &ds, Split::Test)?;
            let cases = (0..voter.num_cases()).collect();
            (Box::new(voter), cases)
        }
    })
}

/// Accuracy sweep over `sweep_thresholds`; writes `out/accuracy_sweep.csv`.
pub fn run_sweep_accuracy(cfg: &Config, inputs: &ModelInputs, out: &Path) -> Result<SweepResult> {
    let template = cfg.stopping()?;
    let (voter, cases) = build_voter(cfg, inputs)?;
    write_run_record(out, "sweep-accuracy", cfg)?;
    let result = accuracy_sweep(
        &*voter,
        &cases,
        &cfg.sweep_thresholds,
        cfg.sweep_trials,
        &template,
        cfg.seed,
    )?;
    write_sweep_csv(&out.join(ACCURACY_CSV), &result)?;
    Ok(result)
}

/// Certainty sweep over `certainty_thresholds`; writes
/// `out/certainty_sweep.csv` and, with at least two thresholds, the fit of
/// worst-case votes against `log10` threshold to `out/certainty_fit.csv`.
pub fn run_sweep_certainty(
    cfg: &Config,
    inputs: &ModelInputs,
    out: &Path,
) -> Result<(SweepResult, Option<FitResult>)> {
    let template = cfg.stopping()?;
    let (voter, cases) = build_voter(cfg, inputs)?;
    write_run_record(out, "sweep-certainty", cfg)?;
    let result = certainty_sweep(
        &*voter,
        &cases,
        &cfg.certainty_thresholds,
        &template,
        cfg.seed,
    )?;
    write_sweep_csv(&out.join(CERTAINTY_CSV), &result)?;
    let fit = if result.rows.len() >= 2 {
        Some(votes_fit(&result)?)
    } else {
        None
    };
    if let Some(fit) = &fit {
        write_fit_csv(&out.join(CERTAINTY_FIT_CSV), fit)?;
    }
    Ok((result, fit))
}
