//! Sequential Bayesian vote accumulation.
//!
//! Votes for `N` categories are tallied and, after every vote, each category's
//! certainty of being the population choice is evaluated from cumulative Beta
//! distributions. Voting stops as soon as some category reaches
//! `1 - acceptable_error`.

mod beta;
mod tally;

pub use beta::{binomial_upper_tail, ln_gamma, reg_incomplete_beta};
pub use tally::{
    check_stop, decide_sequential, favored_certainty, preponderance_certainty, Decision,
    MarginalVariant, Outcome, Rule, StoppingConfig, VoteTally, DEFAULT_MAX_VOTES,
};
