//! CSV persistence of sweep and fit results. Floats are written with 17
//! significant digits so values read back exactly.

use std::path::Path;

use super::fit::FitResult;
use super::sweep::{SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const SWEEP_HEADER: [&str; 6] = [
    "threshold",
    "trials",
    "wrong",
    "inconclusive",
    "max_votes_used",
    "mean_votes_used",
];
pub const FIT_HEADER: [&str; 3] = ["slope", "intercept", "r_squared"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    write_rows(
        path,
        &SWEEP_HEADER,
        result.rows.iter().map(|r| {
            vec![
                fmt_f64(r.threshold),
                r.trials.to_string(),
                r.wrong.to_string(),
                r.inconclusive.to_string(),
                r.max_votes_used.to_string(),
                fmt_f64(r.mean_votes_used),
            ]
        }),
    )
}

pub fn write_fit_csv(path: &Path, fit: &FitResult) -> Result<()> {
    write_rows(
        path,
        &FIT_HEADER,
        [vec![
            fmt_f64(fit.slope),
            fmt_f64(fit.intercept),
            fmt_f64(fit.r_squared),
        ]],
    )
}

/// Header and string records of a CSV file.
fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let csv_err = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::format(path, e.to_string()),
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(String::from)
        .collect();
    let records = r
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, records))
}

fn parse<T: std::str::FromStr>(path: &Path, line: usize, col: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("row {line}: bad {col} value '{s}'")))
}

fn expect_header(path: &Path, header: &[String], want: &[&str]) -> Result<()> {
    if header != want {
        return Err(Error::format(
            path,
            format!("expected header {:?}, found {:?}", want, header),
        ));
    }
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<SweepResult> {
    let (header, records) = read_records(path)?;
    expect_header(path, &header, &SWEEP_HEADER)?;
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(SweepRow {
                threshold: parse(path, i + 1, "threshold", &r[0])?,
                trials: parse(path, i + 1, "trials", &r[1])?,
                wrong: parse(path, i + 1, "wrong", &r[2])?,
                inconclusive: parse(path, i + 1, "inconclusive", &r[3])?,
                max_votes_used: parse(path, i + 1, "max_votes_used", &r[4])?,
                mean_votes_used: parse(path, i + 1, "mean_votes_used", &r[5])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

pub fn read_fit_csv(path: &Path) -> Result<FitResult> {
    let (header, records) = read_records(path)?;
    expect_header(path, &header, &FIT_HEADER)?;
    let [r] = records.as_slice() else {
        return Err(Error::format(
            path,
            format!("expected one data row, found {}", records.len()),
        ));
    };
    Ok(FitResult {
        slope: parse(path, 1, "slope", &r[0])?,
        intercept: parse(path, 1, "intercept", &r[1])?,
        r_squared: parse(path, 1, "r_squared", &r[2])?,
    })
}

/// `(threshold, max_votes_used)` pairs of a sweep CSV, both read as reals.
pub fn read_threshold_votes(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (header, records) = read_records(path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, format!("missing column '{name}'")))
    };
    let (t, v) = (col("threshold")?, col("max_votes_used")?);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok((
                parse(path, i + 1, "threshold", &r[t])?,
                parse(path, i + 1, "max_votes_used", &r[v])?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_sweep_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_sweep_csv(&p, &SweepResult::default()).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "threshold,trials,wrong,inconclusive,max_votes_used,mean_votes_used\n"
        );
        assert_eq!(read_sweep_csv(&p).unwrap(), SweepResult::default());
    }

    #[test]
    fn fit_fixture_is_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let fit = FitResult {
            slope: -7.77,
            intercept: 12.98,
            r_squared: 0.982,
        };
        write_fit_csv(&p, &fit).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_fit_csv(&p).unwrap(), fit);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_sweep_csv(&p), Err(Error::Format { .. })));
        assert!(matches!(
            read_sweep_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn sweep_round_trips_exactly(rows in prop::collection::vec(
            (1e-300f64..0.5, 0u64..1_000_000, 0u64..1000, 0u64..1000, 0u64..10_000, 0.0f64..1e4), 0..20)) {
            let result = SweepResult { rows: rows.into_iter().map(|(threshold, trials, wrong, inconclusive, max_votes_used, mean_votes_used)| SweepRow {
                threshold, trials, wrong, inconclusive, max_votes_used, mean_votes_used,
            }).collect() };
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.csv");
            write_sweep_csv(&p, &result).unwrap();
            prop_assert_eq!(read_sweep_csv(&p).unwrap(), result);
        }
    }
}
