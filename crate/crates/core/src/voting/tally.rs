use serde::{Deserialize, Serialize};

use super::beta::reg_incomplete_beta;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_VOTES: u64 = 10_000;

/// Per-category vote counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VoteTally {
    counts: Vec<u64>,
    total: u64,
}

impl VoteTally {
    pub fn new(num_categories: usize) -> Result<Self> {
        if num_categories < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 categories, got {num_categories}"
            )));
        }
        Ok(VoteTally {
            counts: vec![0; num_categories],
            total: 0,
        })
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let mut t = VoteTally::new(counts.len())?;
        t.total = counts.iter().sum();
        t.counts = counts;
        Ok(t)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn num_categories(&self) -> usize {
        self.counts.len()
    }

    fn check_index(&self, category: usize) -> Result<()> {
        if category >= self.counts.len() {
            return Err(Error::invalid(format!(
                "category {category} out of range for {} categories",
                self.counts.len()
            )));
        }
        Ok(())
    }

    /// Returns a new tally with one more vote for `category`.
    pub fn record_vote(&self, category: usize) -> Result<VoteTally> {
        let mut next = self.clone();
        next.push(category)?;
        Ok(next)
    }

    /// In-place variant of [`record_vote`](Self::record_vote).
    pub fn push(&mut self, category: usize) -> Result<()> {
        self.check_index(category)?;
        self.counts[category] += 1;
        self.total += 1;
        Ok(())
    }

    /// Lowest index among the categories with the most votes.
    pub fn leader(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

/// Certainty criterion used by the stopping rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// The category holds more than half of the population vote.
    #[default]
    Preponderance,
    /// The category beats every rival pairwise; pairwise errors are summed.
    Favored,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Preponderance => "preponderance",
            Rule::Favored => "favored",
        })
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preponderance" => Ok(Rule::Preponderance),
            "favored" => Ok(Rule::Favored),
            other => Err(Error::invalid(format!(
                "unknown rule '{other}' (expected preponderance or favored)"
            ))),
        }
    }
}

/// Which Beta marginal the preponderance rule evaluates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalVariant {
    /// Rivals merged into one category, then the `k + 1` convention:
    /// `Beta(k_i + 1, n - k_i + 1)`.
    #[default]
    MergedRivals,
    /// Exact Dirichlet marginal under a uniform prior:
    /// `Beta(k_i + 1, n - k_i + N - 1)`.
    DirichletMarginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub acceptable_error: f64,
    pub rule: Rule,
    pub max_votes: u64,
    #[serde(default)]
    pub marginal: MarginalVariant,
}

impl StoppingConfig {
    pub fn new(acceptable_error: f64, rule: Rule) -> Result<Self> {
        let cfg = StoppingConfig {
            acceptable_error,
            rule,
            max_votes: DEFAULT_MAX_VOTES,
            marginal: MarginalVariant::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_votes(mut self, max_votes: u64) -> Self {
        self.max_votes = max_votes;
        self
    }

    pub fn with_marginal(mut self, marginal: MarginalVariant) -> Self {
        self.marginal = marginal;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.acceptable_error > 0.0 && self.acceptable_error < 0.5) {
            return Err(Error::invalid(format!(
                "acceptable_error must lie in (0, 0.5), got {}",
                self.acceptable_error
            )));
        }
        if self.max_votes == 0 {
            return Err(Error::invalid("max_votes must be positive"));
        }
        Ok(())
    }

    /// Certainty of `category` under this configuration's rule.
    pub fn certainty(&self, tally: &VoteTally, category: usize) -> Result<f64> {
        match self.rule {
            Rule::Preponderance => marginal_certainty(tally, category, self.marginal),
            Rule::Favored => favored_certainty(tally, category),
        }
    }
}

fn marginal_certainty(tally: &VoteTally, category: usize, variant: MarginalVariant) -> Result<f64> {
    tally.check_index(category)?;
    let k = tally.counts[category] as f64;
    let rest = (tally.total - tally.counts[category]) as f64;
    let b = match variant {
        MarginalVariant::MergedRivals => rest + 1.0,
        MarginalVariant::DirichletMarginal => rest + (tally.num_categories() - 1) as f64,
    };
    Ok(1.0 - reg_incomplete_beta(0.5, k + 1.0, b)?)
}

/// `P(p_category > 1/2)` with all rivals merged into one category.
pub fn preponderance_certainty(tally: &VoteTally, category: usize) -> Result<f64> {
    marginal_certainty(tally, category, MarginalVariant::MergedRivals)
}

/// `1 - Σ_j F(1/2; k_i + 1, k_j + 1)` over rivals `j`, floored at zero.
pub fn favored_certainty(tally: &VoteTally, category: usize) -> Result<f64> {
    tally.check_index(category)?;
    let ki = tally.counts[category] as f64 + 1.0;
    let mut error = 0.0;
    for (j, &kj) in tally.counts.iter().enumerate() {
        if j != category {
            error += reg_incomplete_beta(0.5, ki, kj as f64 + 1.0)?;
        }
    }
    Ok((1.0 - error).max(0.0))
}

/// Returns `(winner, certainty)` when some category's certainty reaches
/// `1 - acceptable_error`; ties go to the higher certainty, then the lower index.
pub fn check_stop(tally: &VoteTally, config: &StoppingConfig) -> Result<Option<(usize, f64)>> {
    let target = 1.0 - config.acceptable_error;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..tally.num_categories() {
        // a category without a vote lead cannot exceed the prior certainty
        if tally.counts[i] == 0 && tally.total > 0 {
            continue;
        }
        let c = config.certainty(tally, i)?;
        if c >= target && best.is_none_or(|(_, bc)| c > bc) {
            best = Some((i, c));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Conclusive,
    /// `max_votes` reached without a decision.
    VoteCap,
    /// The vote source ran dry before a decision.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub winner: usize,
    pub votes_used: u64,
    pub achieved_certainty: f64,
    pub rule: Rule,
    pub conclusive: bool,
    pub outcome: Outcome,
    pub tally: VoteTally,
}

/// Draws votes one at a time until the stopping rule fires, the vote cap is
/// hit, or the source is exhausted.
pub fn decide_sequential<I>(
    votes: I,
    num_categories: usize,
    config: &StoppingConfig,
) -> Result<Decision>
where
    I: IntoIterator<Item = usize>,
{
    config.validate()?;
    let mut tally = VoteTally::new(num_categories)?;
    let mut votes = votes.into_iter();
    let inconclusive = |tally: VoteTally, outcome| -> Result<Decision> {
        let winner = tally.leader();
        Ok(Decision {
            winner,
            votes_used: tally.total(),
            achieved_certainty: config.certainty(&tally, winner)?,
            rule: config.rule,
            conclusive: false,
            outcome,
            tally,
        })
    };
    while tally.total() < config.max_votes {
        let Some(vote) = votes.next() else {
            return inconclusive(tally, Outcome::Exhausted);
        };
        tally.push(vote)?;
        if let Some((winner, certainty)) = check_stop(&tally, config)? {
            return Ok(Decision {
                winner,
                votes_used: tally.total(),
                achieved_certainty: certainty,
                rule: config.rule,
                conclusive: true,
                outcome: Outcome::Conclusive,
                tally,
            });
        }
    }
    inconclusive(tally, Outcome::VoteCap)
}
