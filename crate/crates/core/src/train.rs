//! Seeded mini-batch gradient descent with validation-based early
//! stopping.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PredictionSet, Split};
use crate::error::{Error, Result};
use crate::loss::{LossKind, DEFAULT_CLAMP_EPS};
use crate::metrics;
use crate::model::{Arch, Batch, ModelParams};
use crate::rng;
use crate::synthgen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_kind: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Consecutive epochs without validation improvement before
    /// training halts. Zero disables early stopping.
    pub patience: usize,
    pub seed: u64,
    /// Redraw training outcomes from truth_probs each epoch.
    pub resample: bool,
    pub clamp_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss_kind: LossKind::CrossEntropy,
            lr: 0.1,
            epochs: 40,
            batch_size: 128,
            patience: 8,
            seed: 0,
            resample: false,
            clamp_eps: DEFAULT_CLAMP_EPS,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::invalid_argument("lr must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid_argument("batch_size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid_argument("epochs must be >= 1"));
        }
        if !(0.0 < self.clamp_eps && self.clamp_eps <= 0.1) {
            return Err(Error::invalid_argument("clamp_eps must lie in (0, 0.1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_ece: Option<f64>,
    pub val_brier: Option<f64>,
    pub mse_p: Option<f64>,
    /// Loss minimized this epoch, only set by calibrated training.
    pub loss_kind_this_epoch: Option<&'static str>,
    /// Whether empirical probabilities were refreshed this epoch.
    pub emp_refresh: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

/// Validation metrics shared by plain and calibrated training.
pub(crate) struct ValEval {
    pub ce: Option<f64>,
    pub ece: Option<f64>,
    pub brier: Option<f64>,
    pub mse_p: Option<f64>,
}

pub(crate) fn eval_validation(
    params: &ModelParams,
    ds: &LabeledDataset,
    val_idx: &[usize],
    clamp_eps: f64,
) -> Result<ValEval> {
    if val_idx.is_empty() {
        return Ok(ValEval {
            ce: None,
            ece: None,
            brier: None,
            mse_p: None,
        });
    }
    let probs = params.predict_dataset(ds, val_idx)?;
    let outcomes = ds.gather_outcomes(val_idx);
    let n = probs.len() as f64;
    let ce = probs
        .iter()
        .zip(&outcomes)
        .map(|(&p, &y)| crate::loss::soft_ce(p, y as f64, clamp_eps).0)
        .sum::<f64>()
        / n;
    let brier = probs
        .iter()
        .zip(&outcomes)
        .map(|(&p, &y)| (p - y as f64).powi(2))
        .sum::<f64>()
        / n;
    let pred = PredictionSet::new(probs.clone(), outcomes, None)?;
    let bins = metrics::DEFAULT_BINS.min(pred.len());
    let ece = metrics::ece(&pred, bins)?;
    let mse = match ds.gather_truth(val_idx) {
        Some(truth) => Some(metrics::mse_p(&probs, &truth)?),
        None => None,
    };
    Ok(ValEval {
        ce: Some(ce),
        ece: Some(ece),
        brier: Some(brier),
        mse_p: Some(mse).flatten(),
    })
}

/// Train `arch` on the split's training set, early-stopping on
/// validation cross-entropy. Returns the parameters from the best
/// epoch together with the per-epoch history.
pub fn train(
    dataset: &LabeledDataset,
    split: &Split,
    arch: Arch,
    config: &TrainConfig,
) -> Result<(ModelParams, TrainHistory)> {
    train_observed(dataset, split, arch, config, |_, _| {})
}

/// Like [`train`] but invokes `observer(epoch, params)` after every
/// epoch, which tests and diagnostics use to trace trajectories.
pub fn train_observed(
    dataset: &LabeledDataset,
    split: &Split,
    arch: Arch,
    config: &TrainConfig,
    mut observer: impl FnMut(usize, &ModelParams),
) -> Result<(ModelParams, TrainHistory)> {
    config.validate()?;
    if config.resample && dataset.truth_probs.is_none() {
        return Err(Error::InvalidState(
            "resampled training requires truth_probs".into(),
        ));
    }
    if split.train_idx.is_empty() {
        return Err(Error::invalid_argument("training split is empty"));
    }

    let mut params = ModelParams::init(arch, rng::derive_seed(config.seed, "model-init", 0));
    let features = dataset.gather_features(&split.train_idx);
    let dim = dataset.dim();
    let base_outcomes: Vec<f64> = dataset
        .gather_outcomes(&split.train_idx)
        .into_iter()
        .map(f64::from)
        .collect();

    let n_train = split.train_idx.len();
    let mut positions: Vec<usize> = (0..n_train).collect();
    let mut history = TrainHistory {
        records: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, ModelParams, usize)> = None;
    let mut since_improvement = 0usize;

    let mut batch_feat = vec![0.0; config.batch_size * dim];
    let mut batch_targets = vec![0.0; config.batch_size];

    for epoch in 1..=config.epochs {
        // resample draws fresh labels for the whole dataset; keep the
        // training subset in split order.
        let epoch_targets: Vec<f64> = if config.resample {
            let fresh = synthgen::resample_outcomes(dataset, epoch as u64, config.seed)?;
            split.train_idx.iter().map(|&i| fresh[i] as f64).collect()
        } else {
            base_outcomes.clone()
        };

        positions.shuffle(&mut rng::indexed_stream(config.seed, "shuffle", epoch as u64));

        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (batch_no, chunk) in positions.chunks(config.batch_size).enumerate() {
            for (slot, &pos) in chunk.iter().enumerate() {
                batch_feat[slot * dim..(slot + 1) * dim]
                    .copy_from_slice(&features[pos * dim..(pos + 1) * dim]);
                batch_targets[slot] = epoch_targets[pos];
            }
            let batch = Batch::new(&batch_feat[..chunk.len() * dim], dim, &batch_targets[..chunk.len()]);
            let (loss, grad) = config.loss_kind.loss_grad(&params, &batch, config.clamp_eps);
            if !loss.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            for (w, g) in params.weights_mut().iter_mut().zip(&grad) {
                *w -= config.lr * g;
            }
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = loss_sum / seen as f64;

        let val = eval_validation(&params, dataset, &split.val_idx, config.clamp_eps)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss: val.ce,
            val_ece: val.ece,
            val_brier: val.brier,
            mse_p: val.mse_p,
            loss_kind_this_epoch: None,
            emp_refresh: None,
        });
        observer(epoch, &params);

        if let Some(ce) = val.ce {
            // earliest epoch wins on ties
            let improved = best.as_ref().map_or(true, |(b, _, _)| ce < *b);
            if improved {
                best = Some((ce, params.clone(), epoch));
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if config.patience > 0 && since_improvement >= config.patience {
                    break;
                }
            }
        }
    }

    let (final_params, best_epoch) = match best {
        Some((_, p, e)) => (p, e),
        None => {
            let e = history.records.len();
            (params, e)
        }
    };
    history.best_epoch = best_epoch;
    Ok((final_params, history))
}

const HISTORY_BASE_HEADER: &str = "epoch,train_loss,val_loss,val_ece,val_brier";

/// Write a history as CSV. Optional columns (`mse_p`, the calibrated
/// training annotations) appear only when some record carries them.
pub fn save_history(history: &TrainHistory, path: impl AsRef<Path>) -> Result<()> {
    let has_mse = history.records.iter().any(|r| r.mse_p.is_some());
    let has_cape = history
        .records
        .iter()
        .any(|r| r.loss_kind_this_epoch.is_some());
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = HISTORY_BASE_HEADER.to_string();
    if has_mse {
        header.push_str(",mse_p");
    }
    if has_cape {
        header.push_str(",loss_kind_this_epoch,emp_refresh");
    }
    writeln!(w, "{header}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &history.records {
        let mut row = format!(
            "{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            opt(r.val_loss),
            opt(r.val_ece),
            opt(r.val_brier)
        );
        if has_mse {
            row.push(',');
            row.push_str(&opt(r.mse_p));
        }
        if has_cape {
            row.push_str(&format!(
                ",{},{}",
                r.loss_kind_this_epoch.unwrap_or(""),
                r.emp_refresh.map(|b| b.to_string()).unwrap_or_default()
            ));
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_history(path: impl AsRef<Path>) -> Result<TrainHistory> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(0, "no records")),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 5 || cols[..5].join(",") != HISTORY_BASE_HEADER {
        return Err(Error::parse(1, format!("unrecognized history header {header:?}")));
    }
    let mse_col = cols.iter().position(|c| *c == "mse_p");
    let kind_col = cols.iter().position(|c| *c == "loss_kind_this_epoch");
    let refresh_col = cols.iter().position(|c| *c == "emp_refresh");

    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != cols.len() {
            return Err(Error::parse(lineno, "field count mismatch"));
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
        records.push(EpochRecord {
            epoch: toks[0]
                .parse()
                .map_err(|_| Error::parse(lineno, "bad epoch"))?,
            train_loss: f(toks[1])?,
            val_loss: optf(toks[2])?,
            val_ece: optf(toks[3])?,
            val_brier: optf(toks[4])?,
            mse_p: match mse_col {
                Some(c) => optf(toks[c])?,
                None => None,
            },
            loss_kind_this_epoch: match kind_col {
                Some(c) => match toks[c] {
                    "discrimination" => Some("discrimination"),
                    "calibration" => Some("calibration"),
                    "" => None,
                    other => return Err(Error::parse(lineno, format!("bad loss kind {other:?}"))),
                },
                None => None,
            },
            emp_refresh: match refresh_col {
                Some(c) => match toks[c] {
                    "true" => Some(true),
                    "false" => Some(false),
                    "" => None,
                    other => return Err(Error::parse(lineno, format!("bad flag {other:?}"))),
                },
                None => None,
            },
        });
    }
    if records.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    let best_epoch = records
        .iter()
        .filter(|r| r.val_loss.is_some())
        .min_by(|a, b| a.val_loss.partial_cmp(&b.val_loss).unwrap())
        .map(|r| r.epoch)
        .unwrap_or(records.len());
    Ok(TrainHistory {
        records,
        best_epoch,
    })
}
