//! Batch experiment runner.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use probcal::data::{load_predictions, save_dataset, save_predictions, PredictionSet};
use probcal::loss::LossKind;
use probcal::metrics::MetricReport;
use probcal::model::ModelParams;
use probcal::recal::{platt_apply, platt_fit, temperature_apply, temperature_fit};
use probcal::rng;
use probcal::train::{save_history, train};

use probcal_cli::config::{load_config, ConfigError, ExperimentConfig};
use probcal_cli::elrun::run_earlylearn;
use probcal_cli::experiment::{bootstrap_intervals, run_experiment, run_metric_comparison};

#[derive(Parser)]
#[command(name = "probcal", about = "Probability-estimation experiment runner", version)]
struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured dataset as dataset.csv.
    Gen,
    /// Train a model; writes model.json, history.csv and predictions.
    Train {
        /// Load a dataset CSV instead of generating one.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Calibrated training warm-started from an early-stopped model.
    Cape {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Warm-start checkpoint; a fresh CE model is trained if absent.
        #[arg(long)]
        warm: Option<PathBuf>,
    },
    /// Fit a post-hoc recalibrator on a prediction CSV.
    Recal {
        /// platt or temperature.
        #[arg(long)]
        kind: String,
        /// Predictions used for fitting (prob,outcome CSV).
        #[arg(long)]
        preds: PathBuf,
        /// Optional predictions to transform with the fitted parameters.
        #[arg(long)]
        apply: Option<PathBuf>,
    },
    /// Compute the full metric row for a prediction CSV.
    Eval {
        #[arg(long)]
        preds: PathBuf,
    },
    /// Early-learning trajectory and dimension-ratio sweep.
    Earlylearn,
    /// Per-method metric table with correlations against MSE_p.
    CompareMetrics,
    /// Full report bundle over the configured methods.
    Report,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<probcal::Error> for CliError {
    fn from(e: probcal::Error) -> Self {
        match e {
            probcal::Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn out_dir(cli_out: &Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    if let Some(out) = cli_out {
        return out.clone();
    }
    if let Some(out) = &config.out_dir {
        return PathBuf::from(out);
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    PathBuf::from(format!("runs/{stamp}-seed{}", config.seed))
}

fn load_or_generate(
    data: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> Result<probcal::data::LabeledDataset, CliError> {
    match data {
        Some(path) => Ok(probcal::data::load_dataset(path)?),
        None => Ok(probcal_cli::experiment::build_dataset(config)?),
    }
}

fn write_split_predictions(
    model: &ModelParams,
    dataset: &probcal::data::LabeledDataset,
    idx: &[usize],
    path: &Path,
) -> Result<(), CliError> {
    let probs = model.predict_dataset(dataset, idx)?;
    let pred = PredictionSet::new(probs, dataset.gather_outcomes(idx), dataset.gather_truth(idx))?;
    save_predictions(&pred, path)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = out_dir(&cli.out, &config);

    match &cli.command {
        Command::Gen => {
            std::fs::create_dir_all(&out)?;
            let dataset = probcal_cli::experiment::build_dataset(&config)?;
            save_dataset(&dataset, out.join("dataset.csv"))?;
        }
        Command::Train { data } => {
            std::fs::create_dir_all(&out)?;
            let dataset = load_or_generate(data, &config)?;
            let split = probcal::data::split(
                &dataset,
                config.split,
                rng::derive_seed(config.seed, "split", 0),
            )?;
            let arch = config.model.arch(dataset.dim());
            let train_config = config.train.to_train_config(
                rng::derive_seed(config.seed, "ce_early_stop", 0),
                config.train.loss,
                false,
            );
            let (model, history) = train(&dataset, &split, arch, &train_config)?;
            model.save(out.join("model.json"))?;
            save_history(&history, out.join("history.csv"))?;
            if !split.val_idx.is_empty() {
                write_split_predictions(&model, &dataset, &split.val_idx, &out.join("preds_val.csv"))?;
            }
            if !split.test_idx.is_empty() {
                write_split_predictions(&model, &dataset, &split.test_idx, &out.join("preds_test.csv"))?;
            }
        }
        Command::Cape { data, warm } => {
            std::fs::create_dir_all(&out)?;
            let dataset = load_or_generate(data, &config)?;
            let split = probcal::data::split(
                &dataset,
                config.split,
                rng::derive_seed(config.seed, "split", 0),
            )?;
            let arch = config.model.arch(dataset.dim());
            let warm_model = match warm {
                Some(path) => ModelParams::load(path)?,
                None => {
                    let train_config = config.train.to_train_config(
                        rng::derive_seed(config.seed, "ce_early_stop", 0),
                        LossKind::CrossEntropy,
                        false,
                    );
                    train(&dataset, &split, arch, &train_config)?.0
                }
            };
            let cape_config = config.cape.to_cape_config(
                rng::derive_seed(config.seed, "cape", 0),
                config.cape.estimator,
                split.train_idx.len(),
            );
            let (model, history) = probcal::cape::cape_train(&warm_model, &dataset, &split, &cape_config)?;
            model.save(out.join("cape_model.json"))?;
            save_history(&history, out.join("cape_history.csv"))?;
            if !split.val_idx.is_empty() {
                write_split_predictions(&model, &dataset, &split.val_idx, &out.join("cape_preds_val.csv"))?;
            }
            if !split.test_idx.is_empty() {
                write_split_predictions(&model, &dataset, &split.test_idx, &out.join("cape_preds_test.csv"))?;
            }
        }
        Command::Recal { kind, preds, apply } => {
            std::fs::create_dir_all(&out)?;
            let fit_data = load_predictions(preds)?;
            let transformed = |probs: &[f64]| -> Result<(String, Vec<f64>), CliError> {
                match kind.as_str() {
                    "platt" => {
                        let fit = platt_fit(&fit_data.probs, &fit_data.outcomes)?;
                        Ok((serde_json::to_string_pretty(&fit).unwrap(), platt_apply(&fit, probs)))
                    }
                    "temperature" => {
                        let fit = temperature_fit(&fit_data.probs, &fit_data.outcomes)?;
                        Ok((
                            serde_json::to_string_pretty(&fit).unwrap(),
                            temperature_apply(&fit, probs),
                        ))
                    }
                    other => Err(CliError::Config(format!(
                        "unknown recalibrator {other:?}; expected platt or temperature"
                    ))),
                }
            };
            match apply {
                Some(path) => {
                    let target = load_predictions(path)?;
                    let (params_json, new_probs) = transformed(&target.probs)?;
                    std::fs::write(out.join("recal_params.json"), params_json)?;
                    let recal =
                        PredictionSet::new(new_probs, target.outcomes, target.truth_probs)?;
                    save_predictions(&recal, out.join("recal_applied.csv"))?;
                }
                None => {
                    let (params_json, _) = transformed(&fit_data.probs)?;
                    std::fs::write(out.join("recal_params.json"), params_json)?;
                }
            }
        }
        Command::Eval { preds } => {
            std::fs::create_dir_all(&out)?;
            let pred = load_predictions(preds)?;
            let bins = config.metric_bins.min(pred.len());
            let report = MetricReport::compute(&pred, bins)?;
            let mut header = MetricReport::CSV_HEADER.to_string();
            let mut row = report.csv_row();
            if config.bootstrap > 0 {
                let intervals = bootstrap_intervals(
                    &pred,
                    bins,
                    config.bootstrap,
                    rng::derive_seed(config.seed, "eval-bootstrap", 0),
                );
                for (name, interval) in [
                    "ece", "mce", "ks", "brier", "brier_cal", "brier_ref", "nll", "auc", "mse_p",
                    "kl_p",
                ]
                .iter()
                .zip(intervals)
                {
                    header.push_str(&format!(",{name}_lo,{name}_hi"));
                    match interval {
                        Some((lo, hi)) => row.push_str(&format!(",{lo},{hi}")),
                        None => row.push_str(",,"),
                    }
                }
            }
            std::fs::write(out.join("metrics.csv"), format!("{header}\n{row}\n"))?;
        }
        Command::Earlylearn => {
            let section = config
                .earlylearn
                .clone()
                .ok_or_else(|| CliError::Config("config has no earlylearn section".into()))?;
            run_earlylearn(&section, config.seed, &out)?;
        }
        Command::CompareMetrics => {
            run_metric_comparison(&config, &out).map_err(|e| match e {
                probcal::Error::InvalidState(msg) if msg.contains("ground-truth") => {
                    CliError::Config(msg)
                }
                other => other.into(),
            })?;
        }
        Command::Report => {
            run_experiment(&config, &out)?;
        }
    }
    Ok(())
}
