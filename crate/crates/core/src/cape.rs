//! Calibrated probability estimation: empirical-probability estimators
//! and the alternating training loop.
//!
//! Starting from an early-stopped model, training alternates between
//! the discrimination loss (cross-entropy against observed outcomes)
//! and a calibration loss (cross-entropy against empirical
//! probabilities conditioned on the model output). Empirical
//! probabilities come from quantile bins or from a Gaussian-kernel
//! average over the `r` nearest predictions.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;

use crate::data::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::loss::DEFAULT_CLAMP_EPS;
use crate::metrics;
use crate::model::{Arch, Batch, ModelParams};
use crate::par;
use crate::rng;
use crate::train::{eval_validation, EpochRecord, TrainHistory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapeEstimator {
    /// Quantile bins; each example receives its bin's mean outcome.
    Bin(usize),
    /// Gaussian-kernel weighted mean over the `r` nearest predictions.
    Kernel { r: usize, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapeMode {
    /// Calibration loss on every m-th epoch, discrimination otherwise.
    Alternating,
    /// Every epoch minimizes (1-lambda) L_D + lambda L_C.
    Weighted(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapeConfig {
    /// Cadence of calibration epochs (and of empirical refreshes).
    pub m: usize,
    pub estimator: CapeEstimator,
    pub mode: CapeMode,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub clamp_eps: f64,
}

impl Default for CapeConfig {
    fn default() -> Self {
        CapeConfig {
            m: 5,
            estimator: CapeEstimator::Bin(20),
            mode: CapeMode::Alternating,
            epochs: 25,
            lr: 0.05,
            batch_size: 128,
            seed: 0,
            clamp_eps: DEFAULT_CLAMP_EPS,
        }
    }
}

impl CapeConfig {
    /// Default kernel neighborhood for a training set of size `n`:
    /// a tenth of the data, at least 10 points.
    pub fn default_kernel_r(n: usize) -> usize {
        ((n as f64 / 10.0).round() as usize).clamp(10.min(n), n)
    }

    fn validate(&self, n_train: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid_argument("m must be >= 1"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid_argument("epochs and batch_size must be >= 1"));
        }
        if self.lr <= 0.0 {
            return Err(Error::invalid_argument("lr must be > 0"));
        }
        if !(0.0 < self.clamp_eps && self.clamp_eps <= 0.1) {
            return Err(Error::invalid_argument("clamp_eps must lie in (0, 0.1]"));
        }
        match self.estimator {
            CapeEstimator::Bin(b) => {
                if b == 0 {
                    return Err(Error::invalid_argument("bin count must be >= 1"));
                }
                if n_train < b {
                    return Err(Error::invalid_argument(format!(
                        "training set of {n_train} cannot fill {b} bins"
                    )));
                }
            }
            CapeEstimator::Kernel { r, sigma } => {
                if r == 0 || r > n_train {
                    return Err(Error::invalid_argument(format!(
                        "kernel neighborhood r={r} outside 1..={n_train}"
                    )));
                }
                if sigma <= 0.0 {
                    return Err(Error::invalid_argument("sigma must be > 0"));
                }
            }
        }
        if let CapeMode::Weighted(lambda) = self.mode {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::invalid_argument("lambda must lie in [0,1]"));
            }
        }
        Ok(())
    }
}

/// Per-example empirical probabilities aligned with the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpProbs(pub Vec<f64>);

/// Quantile-bin estimator: each example receives the mean outcome of
/// the bin holding its prediction.
pub fn bin_emp_probs(preds: &[f64], outcomes: &[u8], b: usize) -> Result<EmpProbs> {
    if preds.len() != outcomes.len() {
        return Err(Error::invalid_argument("preds and outcomes length mismatch"));
    }
    let assignment = metrics::quantile_bins(preds, b)?;
    let mut y_sum = vec![0.0; b];
    let mut count = vec![0usize; b];
    for (i, &bin) in assignment.iter().enumerate() {
        y_sum[bin] += outcomes[i] as f64;
        count[bin] += 1;
    }
    let values = assignment
        .iter()
        .map(|&bin| y_sum[bin] / count[bin] as f64)
        .collect();
    Ok(EmpProbs(values))
}

/// Gaussian-kernel estimator over the `r` predictions nearest to each
/// example's own prediction (self included; distance ties resolved
/// self-first, then by original index).
pub fn kernel_emp_probs(preds: &[f64], outcomes: &[u8], r: usize, sigma: f64) -> Result<EmpProbs> {
    let n = preds.len();
    if preds.len() != outcomes.len() {
        return Err(Error::invalid_argument("preds and outcomes length mismatch"));
    }
    if r == 0 || r > n {
        return Err(Error::invalid_argument(format!("r={r} outside 1..={n}")));
    }
    if sigma <= 0.0 {
        return Err(Error::invalid_argument("sigma must be > 0"));
    }

    // one shared sort; everything after is per-example
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| preds[i].partial_cmp(&preds[j]).unwrap().then(i.cmp(&j)));
    let sorted: Vec<f64> = order.iter().map(|&i| preds[i]).collect();
    let sorted_y: Vec<f64> = order.iter().map(|&i| outcomes[i] as f64).collect();

    // run boundaries over equal prediction values, plus outcome prefix
    // sums within each run (sorted order within a run ascends in the
    // original index, because the sort is stable on it)
    let mut run_start = vec![0usize; n];
    let mut run_end = vec![0usize; n];
    let mut run_prefix: Vec<f64> = vec![0.0; n + 1];
    {
        let mut a = 0;
        while a < n {
            let mut b = a + 1;
            while b < n && sorted[b] == sorted[a] {
                b += 1;
            }
            for k in a..b {
                run_start[k] = a;
                run_end[k] = b;
                run_prefix[k + 1] = run_prefix[k] + sorted_y[k];
            }
            a = b;
        }
    }

    let inv_s2 = 1.0 / (sigma * sigma);
    let per_pos = |pos: usize| -> f64 {
        let p_i = sorted[pos];
        let (a, b) = (run_start[pos], run_end[pos]);
        if b - a >= r {
            // the whole neighborhood sits inside this equal-value run;
            // ties resolve to self plus the smallest original indices
            let t = pos - a;
            let sum = if t < r {
                run_prefix[a + r] - run_prefix[a]
            } else {
                run_prefix[a + r - 1] - run_prefix[a] + sorted_y[pos]
            };
            return sum / r as f64;
        }

        // march outward by distance to find the r nearest; members at
        // the maximum distance D are re-selected below by tie order
        let mut lo = pos; // inclusive
        let mut hi = pos + 1; // exclusive
        let mut d_max = 0.0f64;
        for _ in 1..r {
            let dl = if lo > 0 { p_i - sorted[lo - 1] } else { f64::INFINITY };
            let dr = if hi < n { sorted[hi] - p_i } else { f64::INFINITY };
            if dl <= dr {
                lo -= 1;
                d_max = d_max.max(dl);
            } else {
                hi += 1;
                d_max = d_max.max(dr);
            }
        }

        // strict members: distance < D. The run case above guarantees
        // d_max > 0 here, so self always lands in this set.
        let mut w_sum = 0.0;
        let mut wy_sum = 0.0;
        let mut strict = 0usize;
        for k in lo..hi {
            let d = (sorted[k] - p_i).abs();
            if d < d_max {
                let w = (-d * d * inv_s2).exp();
                w_sum += w;
                wy_sum += w * sorted_y[k];
                strict += 1;
            }
        }
        let mut need = r - strict;
        if need > 0 {
            // candidates at distance exactly D form at most two
            // equal-value runs (values p_i - D and p_i + D), possibly
            // overlapping the marched window; within a run the sorted
            // order ascends in the original index, so merging the two
            // run prefixes yields the smallest original indices first
            let w = (-d_max * d_max * inv_s2).exp();
            let (mut la, lb) = if lo < pos && (p_i - sorted[lo]) == d_max {
                (run_start[lo], run_end[lo])
            } else if lo > 0 && (p_i - sorted[lo - 1]) == d_max {
                (run_start[lo - 1], run_end[lo - 1])
            } else {
                (0, 0)
            };
            let (mut ra, rb) = if hi > pos + 1 && (sorted[hi - 1] - p_i) == d_max {
                (run_start[hi - 1], run_end[hi - 1])
            } else if hi < n && (sorted[hi] - p_i) == d_max {
                (run_start[hi], run_end[hi])
            } else {
                (0, 0)
            };
            while need > 0 {
                let left = (la < lb).then(|| order[la]);
                let right = (ra < rb).then(|| order[ra]);
                let take_left = match (left, right) {
                    (Some(li), Some(ri)) => li < ri,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => unreachable!("fewer than r candidates at distance D"),
                };
                if take_left {
                    wy_sum += w * sorted_y[la];
                    la += 1;
                } else {
                    wy_sum += w * sorted_y[ra];
                    ra += 1;
                }
                w_sum += w;
                need -= 1;
            }
        }
        wy_sum / w_sum
    };

    let per_sorted: Vec<f64> = par::map_indexed(n, per_pos);
    let mut values = vec![0.0; n];
    for (pos, &orig) in order.iter().enumerate() {
        values[orig] = per_sorted[pos];
    }
    Ok(EmpProbs(values))
}

impl CapeEstimator {
    pub fn estimate(&self, preds: &[f64], outcomes: &[u8]) -> Result<EmpProbs> {
        match *self {
            CapeEstimator::Bin(b) => bin_emp_probs(preds, outcomes, b),
            CapeEstimator::Kernel { r, sigma } => kernel_emp_probs(preds, outcomes, r, sigma),
        }
    }
}

/// Mean cross-entropy against empirical probabilities, with exact
/// gradient. The per-example gradient of the unclamped loss with
/// respect to the prediction is `(p - p_emp) / (p (1 - p))`; batch
/// targets must hold the empirical probabilities.
pub fn calibration_loss_grad(
    params: &ModelParams,
    batch: &Batch<'_>,
    eps: f64,
) -> (f64, Vec<f64>) {
    params.batch_loss_grad(batch, |u, _p, t| crate::loss::soft_ce_logit(u, t, eps))
}

/// Calibrated training warm-started from an early-stopped model.
/// Model selection is by validation Brier score over all epochs.
pub fn cape_train(
    warm_model: &ModelParams,
    dataset: &LabeledDataset,
    split: &Split,
    config: &CapeConfig,
) -> Result<(ModelParams, TrainHistory)> {
    cape_train_observed(warm_model, dataset, split, config, |_, _| {})
}

/// [`cape_train`] with a per-epoch observer.
pub fn cape_train_observed(
    warm_model: &ModelParams,
    dataset: &LabeledDataset,
    split: &Split,
    config: &CapeConfig,
    observer: impl FnMut(usize, &ModelParams),
) -> Result<(ModelParams, TrainHistory)> {
    run_cape(warm_model.clone(), dataset, split, config, observer)
}

/// Ablation arm: the calibrated loop from a random initialization
/// instead of a warm start.
pub fn cape_from_scratch(
    dataset: &LabeledDataset,
    split: &Split,
    arch: Arch,
    config: &CapeConfig,
) -> Result<(ModelParams, TrainHistory)> {
    let init = ModelParams::init(arch, rng::derive_seed(config.seed, "cape-scratch-init", 0));
    run_cape(init, dataset, split, config, |_, _| {})
}

fn run_cape(
    mut params: ModelParams,
    dataset: &LabeledDataset,
    split: &Split,
    config: &CapeConfig,
    mut observer: impl FnMut(usize, &ModelParams),
) -> Result<(ModelParams, TrainHistory)> {
    config.validate(split.train_idx.len())?;
    if dataset.dim() != params.arch().input_dim() {
        return Err(Error::invalid_argument("dataset dim does not match model"));
    }

    let dim = dataset.dim();
    let features = dataset.gather_features(&split.train_idx);
    let outcomes_u8 = dataset.gather_outcomes(&split.train_idx);
    let outcomes: Vec<f64> = outcomes_u8.iter().map(|&y| y as f64).collect();
    let n_train = split.train_idx.len();

    let mut positions: Vec<usize> = (0..n_train).collect();
    let mut emp: Option<Vec<f64>> = None;
    let mut history = TrainHistory {
        records: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, ModelParams, usize)> = None;

    let mut batch_feat = vec![0.0; config.batch_size * dim];
    let mut batch_targets = vec![0.0; config.batch_size];

    for epoch in 1..=config.epochs {
        let calibration_epoch = epoch % config.m == 0;
        let refresh = match config.mode {
            CapeMode::Alternating => calibration_epoch,
            CapeMode::Weighted(_) => epoch == 1 || calibration_epoch,
        };
        if refresh {
            let preds = params.predict_batch(&features, dim)?;
            emp = Some(config.estimator.estimate(&preds, &outcomes_u8)?.0);
        }

        let (label, target_of): (&'static str, Box<dyn Fn(usize) -> f64>) = match config.mode {
            CapeMode::Alternating if calibration_epoch => {
                let emp = emp.as_ref().expect("refreshed this epoch").clone();
                ("calibration", Box::new(move |pos| emp[pos]))
            }
            CapeMode::Alternating => {
                let ys = outcomes.clone();
                ("discrimination", Box::new(move |pos| ys[pos]))
            }
            CapeMode::Weighted(lambda) => {
                // cross-entropy is linear in its target, so the weighted
                // sum of the two losses is cross-entropy against the
                // mixed target (1-lambda) y + lambda p_emp
                let emp = emp.as_ref().expect("refreshed at epoch 1").clone();
                let ys = outcomes.clone();
                (
                    "weighted",
                    Box::new(move |pos| (1.0 - lambda) * ys[pos] + lambda * emp[pos]),
                )
            }
        };

        positions.shuffle(&mut rng::indexed_stream(config.seed, "cape-shuffle", epoch as u64));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (batch_no, chunk) in positions.chunks(config.batch_size).enumerate() {
            for (slot, &pos) in chunk.iter().enumerate() {
                batch_feat[slot * dim..(slot + 1) * dim]
                    .copy_from_slice(&features[pos * dim..(pos + 1) * dim]);
                batch_targets[slot] = target_of(pos);
            }
            let batch = Batch::new(
                &batch_feat[..chunk.len() * dim],
                dim,
                &batch_targets[..chunk.len()],
            );
            let (loss, grad) = calibration_loss_grad(&params, &batch, config.clamp_eps);
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

        let val = eval_validation(&params, dataset, &split.val_idx, config.clamp_eps)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            val_loss: val.ce,
            val_ece: val.ece,
            val_brier: val.brier,
            mse_p: val.mse_p,
            loss_kind_this_epoch: Some(label),
            emp_refresh: Some(refresh),
        });
        observer(epoch, &params);

        if let Some(brier) = val.brier {
            let improved = best.as_ref().map_or(true, |(b, _, _)| brier < *b);
            if improved {
                best = Some((brier, params.clone(), epoch));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::synthgen::{self, Scenario};

    #[test]
    fn bin_estimator_on_fixture() {
        let emp = bin_emp_probs(&[0.2, 0.4, 0.6, 0.8], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(emp.0, vec![0.5, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn bin_estimator_single_bin_is_global_mean() {
        let emp = bin_emp_probs(&[0.9, 0.1, 0.5, 0.3], &[1, 0, 0, 0], 1).unwrap();
        assert_eq!(emp.0, vec![0.25; 4]);
    }

    #[test]
    fn bin_estimator_all_ones() {
        let emp = bin_emp_probs(&[0.2, 0.6, 0.9], &[1, 1, 1], 3).unwrap();
        assert_eq!(emp.0, vec![1.0; 3]);
    }

    #[test]
    fn kernel_fixture_value() {
        let emp = kernel_emp_probs(&[0.1, 0.11, 0.9], &[0, 1, 1], 2, 0.1).unwrap();
        let w = (-0.01f64 * 0.01 / 0.01).exp();
        let expected = w / (1.0 + w);
        assert!((emp.0[0] - expected).abs() < 1e-12);
        assert!((emp.0[0] - 0.49750).abs() < 1e-5);
    }

    #[test]
    fn kernel_r1_returns_own_outcome() {
        let preds = [0.3, 0.3, 0.7, 0.3, 0.9];
        let ys = [1, 0, 1, 1, 0];
        let emp = kernel_emp_probs(&preds, &ys, 1, 0.05).unwrap();
        let expected: Vec<f64> = ys.iter().map(|&y| y as f64).collect();
        assert_eq!(emp.0, expected);
    }

    #[test]
    fn kernel_flat_limit_is_global_mean() {
        let mut stream = rng::stream(5, "kernel-flat");
        use rand::Rng;
        let preds: Vec<f64> = (0..300).map(|_| stream.gen::<f64>()).collect();
        let ys: Vec<u8> = (0..300).map(|_| stream.gen::<bool>() as u8).collect();
        let mean = ys.iter().map(|&y| y as f64).sum::<f64>() / 300.0;
        let emp = kernel_emp_probs(&preds, &ys, 300, 1e6).unwrap();
        for v in emp.0 {
            assert!((v - mean).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_breaks_distance_ties_by_original_index() {
        // prediction 0.5 at index 3 has 0.4 and 0.6 both at distance 0.1;
        // index order prefers 0.4 (index 0) then 0.6 (index 1)
        let preds = [0.4, 0.6, 0.6, 0.5];
        let ys = [1, 0, 0, 0];
        let emp = kernel_emp_probs(&preds, &ys, 2, 0.5).unwrap();
        let w = (-0.01f64 / 0.25).exp();
        let expected = w * 1.0 / (1.0 + w);
        assert!((emp.0[3] - expected).abs() < 1e-12, "{}", emp.0[3]);
    }

    #[test]
    fn kernel_handles_degenerate_equal_predictions() {
        let preds = vec![0.5; 6];
        let ys = [1, 1, 0, 0, 0, 1];
        // neighborhood = self plus smallest original indices
        let emp = kernel_emp_probs(&preds, &ys, 3, 0.1).unwrap();
        assert_eq!(emp.0[0], 2.0 / 3.0); // {0,1,2}
        assert_eq!(emp.0[5], 1.0);       // {5,0,1}
    }

    #[test]
    fn emp_probs_stay_in_unit_interval() {
        let mut stream = rng::stream(9, "range");
        use rand::Rng;
        let preds: Vec<f64> = (0..500).map(|_| stream.gen::<f64>()).collect();
        let ys: Vec<u8> = (0..500).map(|_| stream.gen::<bool>() as u8).collect();
        for est in [
            CapeEstimator::Bin(7),
            CapeEstimator::Kernel { r: 25, sigma: 0.03 },
        ] {
            let emp = est.estimate(&preds, &ys).unwrap();
            assert!(emp.0.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn bin_estimator_is_consistent_with_reliability_curve() {
        let mut stream = rng::stream(12, "consistency");
        use rand::Rng;
        let preds: Vec<f64> = (0..200).map(|_| stream.gen::<f64>()).collect();
        let ys: Vec<u8> = (0..200).map(|_| stream.gen::<bool>() as u8).collect();
        let b = 8;
        let emp = bin_emp_probs(&preds, &ys, b).unwrap();
        let pred_set = crate::data::PredictionSet::new(preds.clone(), ys.clone(), None).unwrap();
        let curve = metrics::reliability_curve(&pred_set, b).unwrap();
        let assignment = metrics::quantile_bins(&preds, b).unwrap();
        for (i, &bin) in assignment.iter().enumerate() {
            assert_eq!(emp.0[i], curve.bins[bin].p_emp);
        }
    }

    #[test]
    fn calibrated_fixed_point_has_zero_gradient() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Linear, 64, 3, 0.05, 7).unwrap();
        let params = ModelParams::init(Arch::Mlp { dim: 3, hidden: 4 }, 7);
        let preds = params
            .predict_batch(ds.features_flat(), ds.dim())
            .unwrap();
        let batch = Batch::new(ds.features_flat(), ds.dim(), &preds);
        let (_, grad) = calibration_loss_grad(&params, &batch, DEFAULT_CLAMP_EPS);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "gradient norm {norm}");
    }

    #[test]
    fn calibration_loss_with_hard_targets_equals_ce() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Centered, 32, 2, 0.05, 3).unwrap();
        let params = ModelParams::init(Arch::Logistic { dim: 2 }, 3);
        let targets: Vec<f64> = ds.outcomes.iter().map(|&y| y as f64).collect();
        let batch = Batch::new(ds.features_flat(), ds.dim(), &targets);
        let (lc, gc) = calibration_loss_grad(&params, &batch, DEFAULT_CLAMP_EPS);
        let (ld, gd) = crate::loss::ce_loss_grad(&params, &batch, DEFAULT_CLAMP_EPS);
        assert_eq!(lc, ld);
        assert_eq!(gc, gd);
    }

    #[test]
    fn cape_is_deterministic() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Linear, 800, 4, 0.05, 1).unwrap();
        let split = data::split(&ds, (0.7, 0.15, 0.15), 1).unwrap();
        let warm = ModelParams::init(Arch::Mlp { dim: 4, hidden: 8 }, 2);
        let config = CapeConfig {
            epochs: 6,
            ..CapeConfig::default()
        };
        let (p1, h1) = cape_train(&warm, &ds, &split, &config).unwrap();
        let (p2, h2) = cape_train(&warm, &ds, &split, &config).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn large_m_reduces_to_pure_ce_fine_tuning() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Linear, 500, 4, 0.05, 4).unwrap();
        let split = data::split(&ds, (0.7, 0.15, 0.15), 4).unwrap();
        let warm = ModelParams::init(Arch::Logistic { dim: 4 }, 5);
        let base = CapeConfig {
            epochs: 5,
            m: 100,
            ..CapeConfig::default()
        };
        let with_kernel = CapeConfig {
            estimator: CapeEstimator::Kernel { r: 30, sigma: 0.05 },
            ..base.clone()
        };
        // no calibration epoch fires, so the estimator cannot matter
        let (p1, h1) = cape_train(&warm, &ds, &split, &base).unwrap();
        let (p2, h2) = cape_train(&warm, &ds, &split, &with_kernel).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
        assert!(h1
            .records
            .iter()
            .all(|r| r.loss_kind_this_epoch == Some("discrimination")
                && r.emp_refresh == Some(false)));
    }

    #[test]
    fn alternating_schedule_marks_every_mth_epoch() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Linear, 400, 3, 0.05, 8).unwrap();
        let split = data::split(&ds, (0.8, 0.1, 0.1), 8).unwrap();
        let warm = ModelParams::init(Arch::Logistic { dim: 3 }, 9);
        let config = CapeConfig {
            epochs: 10,
            m: 3,
            estimator: CapeEstimator::Bin(10),
            ..CapeConfig::default()
        };
        let (_, history) = cape_train(&warm, &ds, &split, &config).unwrap();
        for r in &history.records {
            let expect_cal = r.epoch % 3 == 0;
            assert_eq!(
                r.loss_kind_this_epoch,
                Some(if expect_cal { "calibration" } else { "discrimination" })
            );
            assert_eq!(r.emp_refresh, Some(expect_cal));
        }
    }

    #[test]
    fn weighted_mode_refreshes_at_start_and_every_mth() {
        let ds = synthgen::generate_scenario_dataset(Scenario::Linear, 400, 3, 0.05, 8).unwrap();
        let split = data::split(&ds, (0.8, 0.1, 0.1), 8).unwrap();
        let warm = ModelParams::init(Arch::Logistic { dim: 3 }, 9);
        let config = CapeConfig {
            epochs: 7,
            m: 3,
            mode: CapeMode::Weighted(0.5),
            estimator: CapeEstimator::Bin(10),
            ..CapeConfig::default()
        };
        let (_, history) = cape_train(&warm, &ds, &split, &config).unwrap();
        let refreshes: Vec<bool> = history.records.iter().map(|r| r.emp_refresh.unwrap()).collect();
        assert_eq!(refreshes, vec![true, false, true, false, false, true, false]);
        assert!(history
            .records
            .iter()
            .all(|r| r.loss_kind_this_epoch == Some("weighted")));
    }
}
