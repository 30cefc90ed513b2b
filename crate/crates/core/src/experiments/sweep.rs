//! Monte Carlo sweeps of the sequential decision over error thresholds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ConfusionVoter};
use crate::error::{Error, Result};
use crate::rng::{derive, stream, Purpose};
use crate::voting::{binomial_upper_tail, decide_sequential, Decision, StoppingConfig};

use super::dataset::{Dataset, Split};

/// Source of votes for identification trials.
///
/// A voter knows a set of cases, each with a true class; `vote` draws the
/// `draw`-th vote of the independent trial stream `key` for a case.
pub trait Voter: Sync {
    fn num_classes(&self) -> usize;
    fn true_class(&self, case: usize) -> usize;
    fn vote(&self, case: usize, key: u64, draw: u64) -> usize;
}

/// Always votes for the true class.
#[derive(Debug, Clone, Copy)]
pub struct PerfectVoter {
    pub num_classes: usize,
}

impl Voter for PerfectVoter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn true_class(&self, case: usize) -> usize {
        case % self.num_classes
    }

    fn vote(&self, case: usize, _key: u64, _draw: u64) -> usize {
        self.true_class(case)
    }
}

/// Case `c` has true class `c mod N`.
impl Voter for ConfusionVoter {
    fn num_classes(&self) -> usize {
        ConfusionVoter::num_classes(self)
    }

    fn true_class(&self, case: usize) -> usize {
        case % ConfusionVoter::num_classes(self)
    }

    fn vote(&self, case: usize, key: u64, draw: u64) -> usize {
        self.keyed_sample(self.true_class(case), key, draw)
    }
}

/// Votes by classifying images drawn with replacement from one split of a
/// dataset. Predictions are computed once per stored image.
#[derive(Debug, Clone)]
pub struct DatasetVoter {
    num_classes: usize,
    labels: Vec<usize>,
    predictions: Vec<Vec<usize>>,
}

impl DatasetVoter {
    pub fn new<C: Classifier + Sync>(model: &C, dataset: &Dataset, split: Split) -> Result<Self> {
        let m = &dataset.manifest;
        let mut predictions = vec![Vec::with_capacity(m.samples_per_case); m.num_cases()];
        let preds: Vec<(usize, usize)> = dataset
            .split(split)
            .par_iter()
            .map(|d| Ok((d.case_id, model.classify(&d.item.image)?)))
            .collect::<Result<_>>()?;
        for (case, p) in preds {
            predictions[case].push(p);
        }
        if let Some(c) = predictions.iter().position(|p| p.is_empty()) {
            return Err(Error::invalid(format!(
                "case {c} has no images in the {} split",
                split.dir_name()
            )));
        }
        Ok(DatasetVoter {
            num_classes: model.num_classes(),
            labels: (0..m.num_cases()).map(|c| m.case(c).emitter).collect(),
            predictions,
        })
    }

    pub fn num_cases(&self) -> usize {
        self.labels.len()
    }

    /// Fraction of stored images of `case` classified correctly.
    pub fn case_accuracy(&self, case: usize) -> f64 {
        let p = &self.predictions[case];
        p.iter().filter(|&&v| v == self.labels[case]).count() as f64 / p.len() as f64
    }
}

impl Voter for DatasetVoter {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn true_class(&self, case: usize) -> usize {
        self.labels[case]
    }

    fn vote(&self, case: usize, key: u64, draw: u64) -> usize {
        let p = &self.predictions[case];
        let i = stream(key, Purpose::VoteStream, case as u64, draw).random_range(0..p.len());
        p[i]
    }
}

/// One threshold's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub trials: u64,
    pub wrong: u64,
    pub inconclusive: u64,
    pub max_votes_used: u64,
    pub mean_votes_used: f64,
}

impl SweepRow {
    pub fn observed_error_rate(&self) -> f64 {
        self.wrong as f64 / self.trials as f64
    }

    /// One-sided binomial test of `errors ≤ threshold`, counting
    /// inconclusive decisions as errors. Returns the p-value.
    pub fn calibration_p_value(&self) -> Result<f64> {
        binomial_upper_tail(self.wrong + self.inconclusive, self.trials, self.threshold)
    }

    pub fn is_calibrated(&self, significance: f64) -> Result<bool> {
        Ok(self.calibration_p_value()? >= significance)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::invalid("no thresholds given"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t < 0.5)) {
        return Err(Error::invalid(format!("threshold {t} outside (0, 0.5)")));
    }
    if thresholds
        .windows(2)
        .any(|w| w[0] == w[1] || (w[0] < w[1]) != (thresholds[0] < thresholds[1]))
    {
        return Err(Error::invalid("thresholds must be strictly ordered"));
    }
    Ok(())
}

/// `count` thresholds spaced evenly in `log10` from `hi` down to `lo`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.log10(), lo.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

fn run_decision<V: Voter + ?Sized>(
    voter: &V,
    case: usize,
    key: u64,
    cfg: &StoppingConfig,
) -> Result<Decision> {
    decide_sequential(
        (0u64..).map(|d| voter.vote(case, key, d)),
        voter.num_classes(),
        cfg,
    )
}

fn summarize(threshold: f64, decisions: &[(usize, Decision)]) -> SweepRow {
    let trials = decisions.len() as u64;
    let wrong = decisions
        .iter()
        .filter(|(t, d)| d.conclusive && d.winner != *t)
        .count() as u64;
    let inconclusive = decisions.iter().filter(|(_, d)| !d.conclusive).count() as u64;
    let total: u64 = decisions.iter().map(|(_, d)| d.votes_used).sum();
    SweepRow {
        threshold,
        trials,
        wrong,
        inconclusive,
        max_votes_used: decisions
            .iter()
            .map(|(_, d)| d.votes_used)
            .max()
            .unwrap_or(0),
        mean_votes_used: if trials == 0 {
            0.0
        } else {
            total as f64 / trials as f64
        },
    }
}

/// For each threshold, `trials` decisions on uniformly drawn cases from
/// `cases`, each on a fresh vote stream.
pub fn accuracy_sweep<V: Voter + ?Sized>(
    voter: &V,
    cases: &[usize],
    thresholds: &[f64],
    trials: u64,
    template: &StoppingConfig,
    seed: u64,
) -> Result<SweepResult> {
    check_thresholds(thresholds)?;
    if trials == 0 || cases.is_empty() {
        return Err(Error::invalid(
            "accuracy sweep needs at least one trial and one case",
        ));
    }
    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(r, &threshold)| {
            let cfg = StoppingConfig {
                acceptable_error: threshold,
                ..*template
            };
            cfg.validate()?;
            let decisions: Vec<(usize, Decision)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let pick =
                        stream(seed, Purpose::CasePick, r as u64, t).random_range(0..cases.len());
                    let case = cases[pick];
                    let key = derive(seed, Purpose::VoteStream, r as u64, t);
                    Ok((
                        voter.true_class(case),
                        run_decision(voter, case, key, &cfg)?,
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(summarize(threshold, &decisions))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

/// For each threshold, one decision per case; rows record the worst and mean
/// vote counts across cases.
pub fn certainty_sweep<V: Voter + ?Sized>(
    voter: &V,
    cases: &[usize],
    thresholds: &[f64],
    template: &StoppingConfig,
    seed: u64,
) -> Result<SweepResult> {
    check_thresholds(thresholds)?;
    if cases.is_empty() {
        return Err(Error::invalid("certainty sweep needs at least one case"));
    }
    let rows = thresholds
        .iter()
        .enumerate()
        .map(|(r, &threshold)| {
            let cfg = StoppingConfig {
                acceptable_error: threshold,
                ..*template
            };
            cfg.validate()?;
            let decisions: Vec<(usize, Decision)> = cases
                .par_iter()
                .enumerate()
                .map(|(i, &case)| {
                    let key = derive(seed, Purpose::VoteStream, r as u64, i as u64);
                    Ok((
                        voter.true_class(case),
                        run_decision(voter, case, key, &cfg)?,
                    ))
                })
                .collect::<Result<_>>()?;
            Ok(summarize(threshold, &decisions))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

/// Runs `count` identifications of uniformly drawn cases at a fixed
/// configuration and returns every decision with its true class.
pub fn identification_trials<V: Voter + ?Sized>(
    voter: &V,
    cases: &[usize],
    count: u64,
    cfg: &StoppingConfig,
    seed: u64,
) -> Result<Vec<(usize, Decision)>> {
    cfg.validate()?;
    (0..count)
        .into_par_iter()
        .map(|t| {
            let case =
                cases[stream(seed, Purpose::CasePick, u64::MAX, t).random_range(0..cases.len())];
            let key = derive(seed, Purpose::VoteStream, u64::MAX, t);
            Ok((voter.true_class(case), run_decision(voter, case, key, cfg)?))
        })
        .collect()
}
