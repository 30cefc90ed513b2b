//! `sei`: synthetic emitter identification by sequential bispectrum voting.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sei_core::app::{self, Config, ModelInputs, Preset};
use sei_core::voting::Rule;
use sei_core::Error;

#[derive(Parser)]
#[command(
    name = "sei",
    version,
    about = "Emitter identification by sequential bispectrum voting"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON configuration file; absent keys take preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for all outputs; created if absent.
    #[arg(long, global = true, default_value = "sei-out")]
    output_dir: PathBuf,
    /// Acceptable error threshold. For sweeps, replaces the threshold list.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Stopping rule: preponderance or favored.
    #[arg(long, global = true)]
    rule: Option<Rule>,
    /// Defaults to start from: desk or paper.
    #[arg(long, global = true)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct ModelArgs {
    /// Dataset store [default: <output-dir>/dataset].
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Trained model [default: <output-dir>/model.smx].
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize emitter recordings as iq32 files.
    Generate {
        /// Only this emitter index.
        #[arg(long)]
        emitter: Option<usize>,
    },
    /// Build the train/val/test feature-image store.
    Featurize,
    /// Train the softmax classifier on the image store.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Identify the emitter of an iq32 recording.
    Identify {
        signal: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Error rate of sequential decisions per threshold.
    SweepAccuracy(ModelArgs),
    /// Votes needed per threshold, with a linear fit against log10 threshold.
    SweepCertainty(ModelArgs),
    /// Summarize the sweep CSVs in a results directory.
    Report {
        /// [default: <output-dir>]
        dir: Option<PathBuf>,
    },
}

fn load_config(g: &Global) -> sei_core::Result<Config> {
    let mut cfg = match (&g.config, g.preset) {
        (Some(path), None) => app::parse_config(path)?,
        (Some(path), Some(preset)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            app::parse_config_str(&text, Some(preset))?
        }
        (None, preset) => Config::preset(preset.unwrap_or_default()),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(rule) = g.rule {
        cfg.rule = rule;
    }
    if let Some(t) = g.threshold {
        cfg.acceptable_error = t;
        cfg.sweep_thresholds = vec![t];
        cfg.certainty_thresholds = vec![t];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> sei_core::Result<ExitCode> {
    let out = &cli.global.output_dir;
    if let Command::Report { dir } = &cli.command {
        let report = app::run_report(dir.as_ref().unwrap_or(out))?;
        print!("{}", report.text);
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = load_config(&cli.global)?;
    app::ensure_dir(out)?;
    let inputs = |m: &ModelArgs| ModelInputs {
        dataset_dir: m
            .dataset
            .clone()
            .unwrap_or_else(|| out.join(app::DATASET_DIR)),
        model_path: m.model.clone().unwrap_or_else(|| out.join(app::MODEL_FILE)),
    };
    match &cli.command {
        Command::Generate { emitter } => {
            for path in app::run_generate(&cfg, out, *emitter)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Featurize => {
            let dir = app::run_featurize(&cfg, out)?;
            println!("wrote dataset to {} (seed {})", dir.display(), cfg.seed);
        }
        Command::Train { dataset } => {
            let dataset = dataset
                .clone()
                .unwrap_or_else(|| out.join(app::DATASET_DIR));
            let s = app::run_train(&cfg, &dataset, out)?;
            println!(
                "trained {} epochs; per-class validation accuracy {:?}",
                s.report.epochs_run, s.validation_accuracy
            );
            println!("wrote {}", s.model_path.display());
        }
        Command::Identify { signal, model } => {
            let model = model.clone().unwrap_or_else(|| out.join(app::MODEL_FILE));
            let report = app::run_identify(&cfg, signal, &model, out)?;
            println!("{report}");
            if !report.decision.conclusive {
                eprintln!(
                    "inconclusive: certainty not reached within {} votes",
                    cfg.max_votes
                );
                return Ok(ExitCode::from(app::EXIT_INCONCLUSIVE as u8));
            }
        }
        Command::SweepAccuracy(m) => {
            let result = app::run_sweep_accuracy(&cfg, &inputs(m), out)?;
            println!("threshold    trials  wrong  inconclusive  error rate");
            for r in &result.rows {
                println!(
                    "{:<12.4e} {:>6} {:>6} {:>13} {:>11.3e}",
                    r.threshold,
                    r.trials,
                    r.wrong,
                    r.inconclusive,
                    r.observed_error_rate()
                );
            }
        }
        Command::SweepCertainty(m) => {
            let (result, fit) = app::run_sweep_certainty(&cfg, &inputs(m), out)?;
            for r in &result.rows {
                println!(
                    "E = {:<12.4e} max votes {:>5}  mean {:.2}",
                    r.threshold, r.max_votes_used, r.mean_votes_used
                );
            }
            if let Some(f) = fit {
                println!(
                    "fit: slope {:.4}, intercept {:.4}, R^2 {:.4}; {:.4} votes per decade",
                    f.slope, f.intercept, f.r_squared, -f.slope
                );
            }
        }
        Command::Report { .. } => unreachable!(),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", app::error_category(&e));
            ExitCode::from(app::exit_code(&e) as u8)
        }
    }
}
