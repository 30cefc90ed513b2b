use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::Rng;

use sei_core::app::{self, Config, ModelInputs, Preset, VoterKind};
use sei_core::bispectrum::BispectrumImage;
use sei_core::classifier::{argmax, estimate_confusion, read_model, Classifier};
use sei_core::experiments::{build_dataset, load_dataset, log_spaced, persist_dataset, Split};
use sei_core::rng::{stream, Purpose};
use sei_core::Error;

const SEED: u64 = 42;

/// Desk-scale dataset and model, built once for the whole file.
struct Trained {
    _dir: tempfile::TempDir,
    out: PathBuf,
    cfg: Config,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let cfg = Config {
            seed: SEED,
            ..Config::preset(Preset::Desk)
        };
        let ds = app::run_featurize(&cfg, &out).unwrap();
        app::run_train(&cfg, &ds, &out).unwrap();
        Trained {
            _dir: dir,
            out,
            cfg,
        }
    })
}

fn model_path() -> PathBuf {
    trained().out.join(app::MODEL_FILE)
}

#[test]
fn every_class_beats_chance_on_validation() {
    let t = trained();
    let model = read_model(&model_path()).unwrap();
    let ds = load_dataset(&t.out.join(app::DATASET_DIR)).unwrap();
    let m = estimate_confusion(&model, &ds.labeled(Split::Val)).unwrap();
    for (i, row) in m.iter().enumerate() {
        assert!(row[i] > 0.5, "class {i} diagonal {}", row[i]);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn classify_is_argmax_of_normalized_probabilities() {
    let model = read_model(&model_path()).unwrap();
    let side = trained().cfg.image_side();
    let mut rng = stream(SEED, Purpose::Shuffle, 99, 0);
    for _ in 0..1000 {
        let pixels = (0..side * side * 3).map(|_| rng.random::<u8>()).collect();
        let img = BispectrumImage::new(side, side, pixels).unwrap();
        let p = model.class_probabilities(&img).unwrap();
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(model.classify(&img).unwrap(), argmax(&p));
    }
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(tree_bytes(&p));
        } else {
            out.push((
                p.strip_prefix(dir).unwrap().to_path_buf(),
                fs::read(&p).unwrap(),
            ));
        }
    }
    out.sort();
    out
}

#[test]
fn rebuilt_store_is_byte_identical() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    persist_dataset(&build_dataset(&t.cfg.manifest()).unwrap(), dir.path()).unwrap();
    let a = tree_bytes(dir.path());
    assert_eq!(a.len(), 3 * 1200 + 1);
    assert!(a == tree_bytes(&t.out.join(app::DATASET_DIR)));
}

#[test]
fn identifies_emitter_two() {
    let t = trained();
    let out = tempfile::tempdir().unwrap();
    let signal = app::run_generate(&t.cfg, out.path(), Some(2))
        .unwrap()
        .remove(0);
    let report = app::run_identify(&t.cfg, &signal, &model_path(), out.path()).unwrap();
    assert!(report.decision.conclusive);
    assert_eq!(report.decision.winner, 2);
    assert!(report.decision.achieved_certainty >= 1.0 - 1e-3);
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join(app::DECISION_FILE)).unwrap())
            .unwrap();
    assert_eq!(saved["seed"], SEED);
    assert_eq!(saved["decision"]["winner"], 2);
}

#[test]
fn loose_threshold_concludes_within_a_handful_of_votes() {
    let t = trained();
    let cfg = Config {
        acceptable_error: 0.4,
        ..t.cfg.clone()
    };
    let out = tempfile::tempdir().unwrap();
    for signal in app::run_generate(&cfg, out.path(), None).unwrap() {
        let d = app::run_identify(&cfg, &signal, &model_path(), out.path())
            .unwrap()
            .decision;
        assert!(d.conclusive && d.votes_used <= 5, "{d:?}");
    }
}

#[test]
fn mismatched_model_is_reported() {
    let t = trained();
    let out = tempfile::tempdir().unwrap();
    let signal = app::run_generate(&t.cfg, out.path(), Some(0))
        .unwrap()
        .remove(0);
    let cfg = Config {
        subsample_length: 560,
        ..t.cfg.clone()
    };
    let err = app::run_identify(&cfg, &signal, &model_path(), out.path()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
    let err =
        app::run_identify(&t.cfg, &signal, &out.path().join("none.smx"), out.path()).unwrap_err();
    assert!(
        matches!(err, Error::Io { .. }) && err.to_string().contains("none.smx"),
        "{err}"
    );
}

#[test]
fn model_votes_make_no_errors_down_to_one_in_a_million() {
    let t = trained();
    let cfg = Config {
        voter: VoterKind::Model,
        certainty_thresholds: log_spaced(1e-6, 1e-1, 6),
        ..t.cfg.clone()
    };
    let inputs = ModelInputs {
        dataset_dir: t.out.join(app::DATASET_DIR),
        model_path: model_path(),
    };
    let out = tempfile::tempdir().unwrap();
    let (r, fit) = app::run_sweep_certainty(&cfg, &inputs, out.path()).unwrap();
    assert!(
        r.rows
            .iter()
            .all(|row| row.wrong == 0 && row.inconclusive == 0),
        "{r:?}"
    );
    assert!(fit.unwrap().slope < 0.0);
}

fn write_fixture(dir: &Path, name: &str, points: &[(f64, f64)]) {
    let mut text =
        String::from("threshold,trials,wrong,inconclusive,max_votes_used,mean_votes_used\n");
    for (t, v) in points {
        text += &format!("{t:e},100,0,0,{v},{v}\n");
    }
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn report_recovers_fixture_line() {
    let dir = tempfile::tempdir().unwrap();
    let pts: Vec<(f64, f64)> = (1..=12)
        .map(|d| {
            let x = -(d as f64);
            (10f64.powf(x), -7.77 * x + 12.98)
        })
        .collect();
    write_fixture(dir.path(), "fixture.csv", &pts);
    let report = app::run_report(dir.path()).unwrap();
    let fit = report.files[0].fit.as_ref().unwrap();
    assert!((fit.slope + 7.77).abs() < 1e-9 && (fit.intercept - 12.98).abs() < 1e-9);
    assert!((report.files[0].votes_per_decade().unwrap() - 7.77).abs() < 1e-9);
    assert!(
        report.text.contains("slope -7.7700") && report.text.contains("7.7700 votes per decade"),
        "{}",
        report.text
    );
    let csv = fs::read_to_string(dir.path().join(app::REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 2);
    // the summary file itself is not mistaken for a sweep on a second pass
    assert_eq!(app::run_report(dir.path()).unwrap().files.len(), 1);
}

#[test]
fn single_threshold_report_refuses_fit_but_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "one.csv", &[(1e-3, 9.0)]);
    let report = app::run_report(dir.path()).unwrap();
    assert!(report.files[0].fit.is_err());
    assert!(
        report.text.contains("fit refused") && report.text.contains("max votes 9"),
        "{}",
        report.text
    );
}

#[test]
fn empty_results_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(app::run_report(dir.path()).is_err());
}

#[test]
fn perfect_voter_report_gives_log2_ten_votes_per_decade() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config {
        voter: VoterKind::Perfect,
        ..Config::preset(Preset::Desk)
    };
    let inputs = ModelInputs {
        dataset_dir: dir.path().into(),
        model_path: dir.path().into(),
    };
    app::run_sweep_certainty(&cfg, &inputs, dir.path()).unwrap();
    let report = app::run_report(dir.path()).unwrap();
    assert_eq!(report.files.len(), 1);
    let vpd = report.files[0].votes_per_decade().unwrap();
    assert!((vpd - 10f64.log2()).abs() < 0.05, "{vpd}");
}
