//! Datasets and the Monte Carlo experiments: accuracy sweep, certainty sweep
//! with a linear fit of votes against `log10` threshold, and the bagging
//! comparison.

mod dataset;
mod fit;
mod results;
mod sweep;

pub use dataset::{
    build_dataset, load_dataset, persist_dataset, read_manifest, Case, Dataset, DatasetItem,
    DatasetManifest, Split,
};
pub use fit::{bagging_comparison, linear_fit, FitResult};
pub use results::{
    fmt_f64, read_fit_csv, read_sweep_csv, read_threshold_votes, write_fit_csv, write_sweep_csv,
    FIT_HEADER, SWEEP_HEADER,
};
pub use sweep::{
    accuracy_sweep, certainty_sweep, identification_trials, log_spaced, DatasetVoter, PerfectVoter,
    SweepResult, SweepRow, Voter,
};

/// Fit of worst-case votes against `log10(threshold)` for a sweep.
pub fn votes_fit(result: &SweepResult) -> crate::Result<FitResult> {
    let pts: Vec<(f64, f64)> = result
        .rows
        .iter()
        .map(|r| (r.threshold.log10(), r.max_votes_used as f64))
        .collect();
    linear_fit(&pts)
}
