//! Evaluation metrics for probability estimates.
//!
//! Calibration metrics (ECE, MCE) use equal-count quantile bins with
//! ties broken by original index. The KS error is binning-free. The
//! Brier score decomposes exactly into calibration + refinement by
//! grouping on identical predicted values. MSE_p and KL_p compare
//! against ground-truth probabilities and are only available on
//! synthetic data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::PredictionSet;
use crate::error::{Error, Result};

/// Bin count used for reporting throughout the crate.
pub const DEFAULT_BINS: usize = 15;

/// Clamp applied before logarithms in NLL and KL_p.
pub const LOG_CLAMP: f64 = 1e-12;

/// Per-bin mean predicted probability, mean outcome, and population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBin {
    pub q_mean: f64,
    pub p_emp: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurve {
    pub bins: Vec<ReliabilityBin>,
}

/// Assign each example to one of `b` equal-count bins by sorted
/// prediction order (stable in the original index).
pub fn quantile_bins(probs: &[f64], b: usize) -> Result<Vec<usize>> {
    let n = probs.len();
    if b == 0 {
        return Err(Error::invalid_argument("bin count must be >= 1"));
    }
    if n < b {
        return Err(Error::invalid_argument(format!(
            "cannot form {b} quantile bins from {n} examples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| probs[i].partial_cmp(&probs[j]).unwrap().then(i.cmp(&j)));
    let mut assignment = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        assignment[i] = rank * b / n;
    }
    Ok(assignment)
}

pub fn reliability_curve(pred: &PredictionSet, b: usize) -> Result<ReliabilityCurve> {
    let assignment = quantile_bins(&pred.probs, b)?;
    let mut q_sum = vec![0.0; b];
    let mut y_sum = vec![0.0; b];
    let mut count = vec![0usize; b];
    for (i, &bin) in assignment.iter().enumerate() {
        q_sum[bin] += pred.probs[i];
        y_sum[bin] += pred.outcomes[i] as f64;
        count[bin] += 1;
    }
    let bins = (0..b)
        .map(|k| ReliabilityBin {
            q_mean: q_sum[k] / count[k] as f64,
            p_emp: y_sum[k] / count[k] as f64,
            count: count[k],
        })
        .collect();
    Ok(ReliabilityCurve { bins })
}

/// Unweighted mean absolute per-bin calibration gap.
pub fn ece(pred: &PredictionSet, b: usize) -> Result<f64> {
    let curve = reliability_curve(pred, b)?;
    let sum: f64 = curve
        .bins
        .iter()
        .map(|bin| (bin.p_emp - bin.q_mean).abs())
        .sum();
    Ok(sum / b as f64)
}

/// Maximum absolute per-bin calibration gap.
pub fn mce(pred: &PredictionSet, b: usize) -> Result<f64> {
    let curve = reliability_curve(pred, b)?;
    Ok(curve
        .bins
        .iter()
        .map(|bin| (bin.p_emp - bin.q_mean).abs())
        .fold(0.0, f64::max))
}

/// Kolmogorov-Smirnov calibration error: the maximum gap between the
/// cumulative positive-outcome mass and the cumulative predicted mass.
/// Both curves are step functions that only change at prediction
/// values, so the maximum over the sorted sample values is exact.
pub fn ks_error(pred: &PredictionSet) -> f64 {
    let n = pred.len() as f64;
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&i, &j| pred.probs[i].partial_cmp(&pred.probs[j]).unwrap());
    let mut phi1 = 0.0;
    let mut phi2 = 0.0;
    let mut best = 0.0f64;
    let mut k = 0;
    while k < order.len() {
        // advance through all samples sharing this prediction value
        let v = pred.probs[order[k]];
        while k < order.len() && pred.probs[order[k]] == v {
            let i = order[k];
            phi1 += pred.outcomes[i] as f64 / n;
            phi2 += pred.probs[i] / n;
            k += 1;
        }
        best = best.max((phi1 - phi2).abs());
    }
    best
}

/// Mean squared error between predictions and observed outcomes.
pub fn brier(pred: &PredictionSet) -> f64 {
    let n = pred.len() as f64;
    pred.probs
        .iter()
        .zip(&pred.outcomes)
        .map(|(&p, &y)| (p - y as f64).powi(2))
        .sum::<f64>()
        / n
}

/// Split the Brier score into calibration and refinement terms by
/// grouping examples that share an identical predicted value.
pub fn brier_decomposition(pred: &PredictionSet) -> (f64, f64) {
    let n = pred.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pred.probs[i].partial_cmp(&pred.probs[j]).unwrap());
    let mut calibration = 0.0;
    let mut refinement = 0.0;
    let mut k = 0;
    while k < n {
        let v = pred.probs[order[k]];
        let mut count = 0usize;
        let mut ones = 0usize;
        while k < n && pred.probs[order[k]] == v {
            count += 1;
            ones += pred.outcomes[order[k]] as usize;
            k += 1;
        }
        let q_bar = ones as f64 / count as f64;
        calibration += count as f64 * (v - q_bar).powi(2);
        refinement += count as f64 * q_bar * (1.0 - q_bar);
    }
    (calibration / n as f64, refinement / n as f64)
}

/// Mean negative log-likelihood of the outcomes, with predictions
/// clamped to `[LOG_CLAMP, 1 - LOG_CLAMP]`.
pub fn nll(pred: &PredictionSet) -> f64 {
    let n = pred.len() as f64;
    pred.probs
        .iter()
        .zip(&pred.outcomes)
        .map(|(&p, &y)| {
            let pc = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            if y == 1 {
                -pc.ln()
            } else {
                -(1.0 - pc).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Mann-Whitney AUC: P(score of a positive > score of a negative) with
/// half weight on ties, computed through midranks.
pub fn auc(pred: &PredictionSet) -> Result<f64> {
    let n_pos = pred.outcomes.iter().filter(|&&y| y == 1).count();
    let n_neg = pred.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC requires both a positive and a negative outcome".into(),
        ));
    }
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&i, &j| pred.probs[i].partial_cmp(&pred.probs[j]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut k = 0;
    while k < order.len() {
        let v = pred.probs[order[k]];
        let start = k;
        let mut ones = 0usize;
        while k < order.len() && pred.probs[order[k]] == v {
            ones += pred.outcomes[order[k]] as usize;
            k += 1;
        }
        // midrank of the tie group, 1-based
        let midrank = (start + k + 1) as f64 / 2.0;
        rank_sum_pos += midrank * ones as f64;
    }
    let u = rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mean squared error against ground-truth probabilities.
pub fn mse_p(pred_probs: &[f64], truth_probs: &[f64]) -> Result<f64> {
    if pred_probs.len() != truth_probs.len() {
        return Err(Error::invalid_argument("length mismatch"));
    }
    if pred_probs.is_empty() {
        return Err(Error::invalid_argument("empty input"));
    }
    Ok(pred_probs
        .iter()
        .zip(truth_probs)
        .map(|(&a, &b)| (a - b).powi(2))
        .sum::<f64>()
        / pred_probs.len() as f64)
}

/// Mean KL divergence from predictions to ground truth, both clamped to
/// `[LOG_CLAMP, 1 - LOG_CLAMP]`.
pub fn kl_p(pred_probs: &[f64], truth_probs: &[f64]) -> Result<f64> {
    if pred_probs.len() != truth_probs.len() {
        return Err(Error::invalid_argument("length mismatch"));
    }
    if pred_probs.is_empty() {
        return Err(Error::invalid_argument("empty input"));
    }
    let kl = pred_probs
        .iter()
        .zip(truth_probs)
        .map(|(&a, &b)| {
            let p = a.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            let q = b.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
        })
        .sum::<f64>()
        / pred_probs.len() as f64;
    Ok(kl)
}

/// All computable metrics for one prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub ece: f64,
    pub mce: f64,
    pub ks: f64,
    pub brier: f64,
    pub brier_cal: f64,
    pub brier_ref: f64,
    pub nll: f64,
    pub auc: f64,
    pub mse_p: Option<f64>,
    pub kl_p: Option<f64>,
}

impl MetricReport {
    /// Compute every metric; MSE_p / KL_p only when the prediction set
    /// carries ground-truth probabilities.
    pub fn compute(pred: &PredictionSet, bins: usize) -> Result<Self> {
        let (brier_cal, brier_ref) = brier_decomposition(pred);
        let (mse, kl) = match &pred.truth_probs {
            Some(truth) => (
                Some(mse_p(&pred.probs, truth)?),
                Some(kl_p(&pred.probs, truth)?),
            ),
            None => (None, None),
        };
        Ok(MetricReport {
            ece: ece(pred, bins)?,
            mce: mce(pred, bins)?,
            ks: ks_error(pred),
            brier: brier(pred),
            brier_cal,
            brier_ref,
            nll: nll(pred),
            auc: auc(pred)?,
            mse_p: mse,
            kl_p: kl,
        })
    }

    pub const CSV_HEADER: &'static str =
        "ece,mce,ks,brier,brier_cal,brier_ref,nll,auc,mse_p,kl_p";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.ece,
            self.mce,
            self.ks,
            self.brier,
            self.brier_cal,
            self.brier_ref,
            self.nll,
            self.auc,
            opt(self.mse_p),
            opt(self.kl_p)
        )
    }

    pub fn values(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("ece", Some(self.ece)),
            ("mce", Some(self.mce)),
            ("ks", Some(self.ks)),
            ("brier", Some(self.brier)),
            ("brier_cal", Some(self.brier_cal)),
            ("brier_ref", Some(self.brier_ref)),
            ("nll", Some(self.nll)),
            ("auc", Some(self.auc)),
            ("mse_p", self.mse_p),
            ("kl_p", self.kl_p),
        ]
    }
}

pub fn save_reliability_curve(curve: &ReliabilityCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "q_mean,p_emp,count")?;
    for bin in &curve.bins {
        writeln!(w, "{},{},{}", bin.q_mean, bin.p_emp, bin.count)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_reliability_curve(path: impl AsRef<Path>) -> Result<ReliabilityCurve> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            let line = line?;
            if line.trim() != "q_mean,p_emp,count" {
                return Err(Error::parse(1, format!("unrecognized curve header {line:?}")));
            }
        }
        None => return Err(Error::parse(0, "no records")),
    }
    let mut bins = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 3 {
            return Err(Error::parse(lineno, "expected 3 fields"));
        }
        let parse = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad number {t:?}")))
        };
        bins.push(ReliabilityBin {
            q_mean: parse(toks[0])?,
            p_emp: parse(toks[1])?,
            count: parse(toks[2])? as usize,
        });
    }
    if bins.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    Ok(ReliabilityCurve { bins })
}
