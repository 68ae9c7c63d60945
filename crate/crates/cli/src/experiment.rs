//! End-to-end experiment pipelines: generate, train every requested
//! method, evaluate on the test split, and write the report bundle.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use probcal::cape::{cape_from_scratch, cape_train};
use probcal::data::{LabeledDataset, PredictionSet, Split};
use probcal::loss::LossKind;
use probcal::math::pearson;
use probcal::metrics::{reliability_curve, MetricReport};
use probcal::model::ModelParams;
use probcal::par;
use probcal::recal::{platt_apply, platt_fit, temperature_apply, temperature_fit};
use probcal::rng;
use probcal::train::train;
use probcal::{Error, Result};

use crate::config::{DatasetKind, EstimatorKind, ExperimentConfig, Method};
use crate::svg::render_reliability_svg;

pub struct MethodOutcome {
    pub method: Method,
    pub pred: PredictionSet,
    pub report: MetricReport,
}

/// Dataset + split + the early-stopped cross-entropy model shared by
/// the post-hoc and warm-started methods.
pub struct ExperimentContext {
    pub dataset: LabeledDataset,
    pub split: Split,
    pub ce_model: ModelParams,
}

pub fn build_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    let d = &config.dataset;
    let seed = rng::derive_seed(config.seed, "dataset", 0);
    match d.kind {
        DatasetKind::Scenario => {
            probcal::synthgen::generate_scenario_dataset(d.scenario, d.n, d.dim, d.noise_sd, seed)
        }
        DatasetKind::Logistic => {
            let spec = probcal::synthgen::LogisticModelSpec::first_axis(d.dim, d.gamma)?;
            probcal::synthgen::generate_logistic_dataset(&spec, d.n, seed)
        }
    }
}

pub fn prepare_context(config: &ExperimentConfig) -> Result<ExperimentContext> {
    let dataset = build_dataset(config)?;
    let split = probcal::data::split(&dataset, config.split, rng::derive_seed(config.seed, "split", 0))?;
    let arch = config.model.arch(dataset.dim());
    let ce_config = config.train.to_train_config(
        rng::derive_seed(config.seed, "ce_early_stop", 0),
        LossKind::CrossEntropy,
        false,
    );
    let (ce_model, _) = train(&dataset, &split, arch, &ce_config)?;
    Ok(ExperimentContext {
        dataset,
        split,
        ce_model,
    })
}

fn test_prediction_set(
    ctx: &ExperimentContext,
    probs: Vec<f64>,
) -> Result<PredictionSet> {
    let outcomes = ctx.dataset.gather_outcomes(&ctx.split.test_idx);
    let truth = ctx.dataset.gather_truth(&ctx.split.test_idx);
    PredictionSet::new(probs, outcomes, truth)
}

fn run_method(ctx: &ExperimentContext, config: &ExperimentConfig, method: Method) -> Result<PredictionSet> {
    let dataset = &ctx.dataset;
    let split = &ctx.split;
    let arch = config.model.arch(dataset.dim());
    let method_seed = rng::derive_seed(config.seed, method.name(), 0);
    let n_train = split.train_idx.len();

    let probs = match method {
        Method::CeEarlyStop => ctx.ce_model.predict_dataset(dataset, &split.test_idx)?,
        Method::CeResampled => {
            let cfg = config
                .train
                .to_train_config(method_seed, LossKind::CrossEntropy, true);
            let (model, _) = train(dataset, split, arch, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
        Method::Platt => {
            let val = ctx.ce_model.predict_dataset(dataset, &split.val_idx)?;
            let fit = platt_fit(&val, &dataset.gather_outcomes(&split.val_idx))?;
            platt_apply(&fit, &ctx.ce_model.predict_dataset(dataset, &split.test_idx)?)
        }
        Method::Temperature => {
            let val = ctx.ce_model.predict_dataset(dataset, &split.val_idx)?;
            let fit = temperature_fit(&val, &dataset.gather_outcomes(&split.val_idx))?;
            temperature_apply(&fit, &ctx.ce_model.predict_dataset(dataset, &split.test_idx)?)
        }
        Method::Focal => {
            let cfg = config
                .train
                .to_train_config(method_seed, LossKind::Focal(config.focal_beta), false);
            let (model, _) = train(dataset, split, arch, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
        Method::Entropy => {
            let cfg = config.train.to_train_config(
                method_seed,
                LossKind::EntropyPenalty(config.entropy_beta),
                false,
            );
            let (model, _) = train(dataset, split, arch, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
        Method::DeepEnsemble => {
            let members: Vec<Result<Vec<f64>>> = par::map_indexed(config.ensemble_size, |i| {
                let cfg = config.train.to_train_config(
                    rng::derive_seed(method_seed, "member", i as u64),
                    LossKind::CrossEntropy,
                    false,
                );
                let (model, _) = train(dataset, split, arch, &cfg)?;
                model.predict_dataset(dataset, &split.test_idx)
            });
            let mut mean = vec![0.0; split.test_idx.len()];
            for member in members {
                for (acc, p) in mean.iter_mut().zip(member?) {
                    *acc += p;
                }
            }
            for p in &mut mean {
                *p /= config.ensemble_size as f64;
            }
            mean
        }
        Method::CapeBin => {
            let cfg = config.cape.to_cape_config(method_seed, EstimatorKind::Bin, n_train);
            let (model, _) = cape_train(&ctx.ce_model, dataset, split, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
        Method::CapeKernel => {
            let cfg = config.cape.to_cape_config(method_seed, EstimatorKind::Kernel, n_train);
            let (model, _) = cape_train(&ctx.ce_model, dataset, split, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
        Method::CapeFromScratch => {
            let cfg = config.cape.to_cape_config(method_seed, EstimatorKind::Bin, n_train);
            let (model, _) = cape_from_scratch(dataset, split, arch, &cfg)?;
            model.predict_dataset(dataset, &split.test_idx)?
        }
    };
    test_prediction_set(ctx, probs)
}

/// Run every configured method against a shared dataset/split; rows
/// come back in config order.
pub fn run_methods(config: &ExperimentConfig) -> Result<Vec<MethodOutcome>> {
    let ctx = prepare_context(config)?;
    let outcomes: Vec<Result<MethodOutcome>> = par::map_indexed(config.methods.len(), |i| {
        let method = config.methods[i];
        let pred = run_method(&ctx, config, method)
            .map_err(|e| Error::InvalidState(format!("method {}: {e}", method.name())))?;
        let report = MetricReport::compute(&pred, config.metric_bins.min(pred.len()))
            .map_err(|e| Error::InvalidState(format!("method {}: {e}", method.name())))?;
        Ok(MethodOutcome {
            method,
            pred,
            report,
        })
    });
    outcomes.into_iter().collect()
}

const METRIC_NAMES: [&str; 10] = [
    "ece", "mce", "ks", "brier", "brier_cal", "brier_ref", "nll", "auc", "mse_p", "kl_p",
];

/// Percentile bootstrap over test-set resampling. Returns
/// (lo, hi) pairs aligned with `METRIC_NAMES`; metrics unavailable on
/// a replicate (single-class AUC draws, missing truth) yield empty
/// intervals.
pub fn bootstrap_intervals(
    pred: &PredictionSet,
    bins: usize,
    replicates: usize,
    seed: u64,
) -> Vec<Option<(f64, f64)>> {
    let n = pred.len();
    let reports: Vec<Option<MetricReport>> = par::map_indexed(replicates, |rep| {
        let mut stream = rng::indexed_stream(seed, "bootstrap", rep as u64);
        use rand::Rng;
        let idx: Vec<usize> = (0..n).map(|_| stream.gen_range(0..n)).collect();
        let probs: Vec<f64> = idx.iter().map(|&i| pred.probs[i]).collect();
        let outcomes: Vec<u8> = idx.iter().map(|&i| pred.outcomes[i]).collect();
        let truth = pred
            .truth_probs
            .as_ref()
            .map(|t| idx.iter().map(|&i| t[i]).collect());
        let resampled = PredictionSet::new(probs, outcomes, truth).ok()?;
        MetricReport::compute(&resampled, bins.min(n)).ok()
    });

    (0..METRIC_NAMES.len())
        .map(|mi| {
            let mut values: Vec<f64> = reports
                .iter()
                .flatten()
                .filter_map(|r| r.values()[mi].1)
                .collect();
            if values.is_empty() {
                return None;
            }
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some((percentile(&values, 0.025), percentile(&values, 0.975)))
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between closest ranks
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Full report bundle: metrics.csv plus per-method reliability CSV/SVG.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let outcomes = run_methods(config)?;

    let mut w = BufWriter::new(File::create(out.join("metrics.csv"))?);
    let mut header = format!("method,seed,{}", MetricReport::CSV_HEADER);
    if config.bootstrap > 0 {
        for name in METRIC_NAMES {
            header.push_str(&format!(",{name}_lo,{name}_hi"));
        }
    }
    writeln!(w, "{header}")?;
    for outcome in &outcomes {
        let mut row = format!(
            "{},{},{}",
            outcome.method.name(),
            config.seed,
            outcome.report.csv_row()
        );
        if config.bootstrap > 0 {
            let intervals = bootstrap_intervals(
                &outcome.pred,
                config.metric_bins,
                config.bootstrap,
                rng::derive_seed(config.seed, outcome.method.name(), 1),
            );
            for interval in intervals {
                match interval {
                    Some((lo, hi)) => row.push_str(&format!(",{lo},{hi}")),
                    None => row.push_str(",,"),
                }
            }
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;

    for outcome in &outcomes {
        let bins = config.metric_bins.min(outcome.pred.len());
        let curve = reliability_curve(&outcome.pred, bins)?;
        let name = outcome.method.name();
        probcal::metrics::save_reliability_curve(&curve, out.join(format!("reliability_{name}.csv")))?;
        render_reliability_svg(&curve, out.join(format!("reliability_{name}.svg")))?;
    }
    Ok(())
}

/// Per-method (metric, MSE_p) table with Pearson correlations in a
/// trailing `correlation` row. Requires ground-truth probabilities.
pub fn run_metric_comparison(config: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let outcomes = run_methods(config)?;
    if outcomes.iter().any(|o| o.report.mse_p.is_none()) {
        return Err(Error::InvalidState(
            "metric comparison requires ground-truth probabilities".into(),
        ));
    }

    let mut w = BufWriter::new(File::create(out.join("metric_vs_msep.csv"))?);
    writeln!(w, "method,{}", METRIC_NAMES.join(","))?;
    for outcome in &outcomes {
        let cells: Vec<String> = outcome
            .report
            .values()
            .iter()
            .map(|(_, v)| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        writeln!(w, "{},{}", outcome.method.name(), cells.join(","))?;
    }

    let mse: Vec<f64> = outcomes.iter().map(|o| o.report.mse_p.unwrap()).collect();
    let mut corr_cells = Vec::new();
    for mi in 0..METRIC_NAMES.len() {
        if METRIC_NAMES[mi] == "mse_p" {
            corr_cells.push(String::new());
            continue;
        }
        let xs: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.report.values()[mi].1)
            .collect();
        let cell = if xs.len() == outcomes.len() {
            pearson(&xs, &mse).map(|r| r.to_string()).unwrap_or_default()
        } else {
            String::new()
        };
        corr_cells.push(cell);
    }
    if outcomes.len() < 2 {
        eprintln!("warning: correlation undefined with a single method");
    }
    writeln!(w, "correlation,{}", corr_cells.join(","))?;
    w.flush()?;
    Ok(())
}

/// Parse a metrics.csv produced by [`run_experiment`] back into
/// (method, seed, report) rows.
pub fn load_metrics_csv(path: &Path) -> Result<Vec<(String, u64, MetricReport)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => return Err(Error::parse(0, "no records")),
    };
    let expected_prefix = format!("method,seed,{}", MetricReport::CSV_HEADER);
    if !header.starts_with(&expected_prefix) {
        return Err(Error::parse(1, format!("unrecognized metrics header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() < 12 {
            return Err(Error::parse(lineno, "too few fields"));
        }
        let f = |t: &str| -> Result<f64> {
            t.parse()
                .map_err(|_| Error::parse(lineno, format!("bad number {t:?}")))
        };
        let optf = |t: &str| -> Result<Option<f64>> {
            if t.is_empty() {
                Ok(None)
            } else {
                f(t).map(Some)
            }
        };
        rows.push((
            toks[0].to_string(),
            toks[1]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad seed"))?,
            MetricReport {
                ece: f(toks[2])?,
                mce: f(toks[3])?,
                ks: f(toks[4])?,
                brier: f(toks[5])?,
                brier_cal: f(toks[6])?,
                brier_ref: f(toks[7])?,
                nll: f(toks[8])?,
                auc: f(toks[9])?,
                mse_p: optf(toks[10])?,
                kl_p: optf(toks[11])?,
            },
        ));
    }
    if rows.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    Ok(rows)
}
