//! Summaries of sweep CSVs found in a results directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{fmt_f64, linear_fit, read_threshold_votes, FitResult};

pub const REPORT_CSV: &str = "report.csv";

/// Fit of one sweep file, or why it was refused.
#[derive(Debug, Clone)]
pub struct FileReport {
    pub path: PathBuf,
    pub points: Vec<(f64, f64)>,
    pub fit: std::result::Result<FitResult, String>,
}

impl FileReport {
    /// Votes needed per tenfold reduction of the threshold.
    pub fn votes_per_decade(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| -f.slope)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<FileReport>,
    pub text: String,
}

/// True when the file is a CSV whose header names both sweep columns.
fn is_sweep_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "csv")
        && fs::read_to_string(path).ok().is_some_and(|t| {
            let header = t.lines().next().unwrap_or("");
            let cols: Vec<&str> = header.split(',').map(str::trim).collect();
            cols.contains(&"threshold") && cols.contains(&"max_votes_used")
        })
}

/// Fits maximum votes against `log10(threshold)` for every sweep CSV in
/// `dir`, prints a summary and writes `dir/report.csv`.
pub fn run_report(dir: &Path) -> Result<Report> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.retain(|p| is_sweep_csv(p));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::format(dir, "no sweep results found"));
    }

    let mut files = Vec::new();
    let mut text = String::new();
    for path in paths {
        let points = read_threshold_votes(&path)?;
        let xy: Vec<(f64, f64)> = points.iter().map(|&(t, v)| (t.log10(), v)).collect();
        let fit = linear_fit(&xy).map_err(|e| e.to_string());
        let name = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        writeln!(text, "{name}: {} thresholds", points.len()).unwrap();
        for (t, v) in &points {
            writeln!(text, "  E = {t:<12.4e} max votes {v}").unwrap();
        }
        match &fit {
            Ok(f) => writeln!(
                text,
                "  fit: slope {:.4}, intercept {:.4}, R^2 {:.4}; {:.4} votes per decade",
                f.slope, f.intercept, f.r_squared, -f.slope
            )
            .unwrap(),
            Err(why) => writeln!(text, "  fit refused: {why}").unwrap(),
        }
        files.push(FileReport { path, points, fit });
    }

    let out = dir.join(REPORT_CSV);
    let csv_err = |e: csv::Error| Error::format(&out, e.to_string());
    let mut w = csv::Writer::from_path(&out).map_err(csv_err)?;
    w.write_record([
        "file",
        "thresholds",
        "slope",
        "intercept",
        "r_squared",
        "votes_per_decade",
    ])
    .map_err(csv_err)?;
    for f in &files {
        let name = f
            .path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let cols = match &f.fit {
            Ok(fit) => [fit.slope, fit.intercept, fit.r_squared, -fit.slope].map(fmt_f64),
            Err(_) => Default::default(),
        };
        let mut row = vec![name, f.points.len().to_string()];
        row.extend(cols);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&out, e))?;
    Ok(Report { files, text })
}
