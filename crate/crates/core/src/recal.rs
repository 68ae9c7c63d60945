//! Post-hoc recalibration fitted on validation predictions.
//!
//! Platt scaling fits `sigmoid(w * logit(p) + b)` by damped Newton on
//! the validation negative log-likelihood; temperature scaling is the
//! single-parameter special case `sigmoid(logit(p) / T)` fitted by
//! golden-section search. Probabilities are clamped to
//! `[1e-12, 1 - 1e-12]` before the logit, since memorized models emit
//! near-0/1 values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{logit, sigmoid};

const PROB_CLAMP: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 200;
const TEMP_RANGE: (f64, f64) = (1e-2, 1e2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub w: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempParams {
    pub t: f64,
}

fn clamped_logits(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| logit(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)))
        .collect()
}

fn check_two_classes(outcomes: &[u8]) -> Result<()> {
    let pos = outcomes.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == outcomes.len() {
        return Err(Error::FitFailed(
            "validation outcomes contain a single class".into(),
        ));
    }
    Ok(())
}

fn nll_of_scaled(logits: &[f64], outcomes: &[u8], w: f64, b: f64) -> f64 {
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(outcomes)
        .map(|(&s, &y)| {
            let p = sigmoid(w * s + b).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Fit Platt parameters by damped Newton iteration on validation NLL,
/// starting from the identity transform.
pub fn platt_fit(val_probs: &[f64], val_outcomes: &[u8]) -> Result<PlattParams> {
    if val_probs.len() != val_outcomes.len() || val_probs.is_empty() {
        return Err(Error::invalid_argument("probs and outcomes must be aligned and nonempty"));
    }
    check_two_classes(val_outcomes)?;
    let logits = clamped_logits(val_probs);
    let n = logits.len() as f64;

    let mut w = 1.0;
    let mut b = 0.0;
    let mut nll = nll_of_scaled(&logits, val_outcomes, w, b);
    for _ in 0..NEWTON_MAX_ITER {
        // gradient and Hessian of mean NLL in (w, b)
        let mut gw = 0.0;
        let mut gb = 0.0;
        let mut hww = 0.0;
        let mut hwb = 0.0;
        let mut hbb = 0.0;
        for (&s, &y) in logits.iter().zip(val_outcomes) {
            let p = sigmoid(w * s + b);
            let r = p - y as f64;
            let v = p * (1.0 - p);
            gw += r * s;
            gb += r;
            hww += v * s * s;
            hwb += v * s;
            hbb += v;
        }
        gw /= n;
        gb /= n;
        hww /= n;
        hwb /= n;
        hbb /= n;

        if (gw * gw + gb * gb).sqrt() < NEWTON_TOL {
            break;
        }
        let det = hww * hbb - hwb * hwb;
        let (mut dw, mut db) = if det.abs() > 1e-18 {
            ((hbb * gw - hwb * gb) / det, (hww * gb - hwb * gw) / det)
        } else {
            (gw, gb)
        };
        // halve the step until it improves the objective
        let mut accepted = false;
        for _ in 0..50 {
            let cand = nll_of_scaled(&logits, val_outcomes, w - dw, b - db);
            if cand <= nll {
                w -= dw;
                b -= db;
                nll = cand;
                accepted = true;
                break;
            }
            dw *= 0.5;
            db *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(w.is_finite() && b.is_finite()) {
        return Err(Error::FitFailed("Platt fit diverged".into()));
    }
    Ok(PlattParams { w, b })
}

/// Elementwise `sigmoid(w * logit(p) + b)`.
pub fn platt_apply(params: &PlattParams, probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| sigmoid(params.w * logit(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)) + params.b))
        .collect()
}

/// Fit the temperature by golden-section search of the validation NLL
/// over `[1e-2, 1e2]`.
pub fn temperature_fit(val_probs: &[f64], val_outcomes: &[u8]) -> Result<TempParams> {
    if val_probs.len() != val_outcomes.len() || val_probs.is_empty() {
        return Err(Error::invalid_argument("probs and outcomes must be aligned and nonempty"));
    }
    check_two_classes(val_outcomes)?;
    let logits = clamped_logits(val_probs);
    let nll_at = |t: f64| nll_of_scaled(&logits, val_outcomes, 1.0 / t, 0.0);

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = TEMP_RANGE;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = nll_at(c);
    let mut fd = nll_at(d);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = nll_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = nll_at(d);
        }
    }
    let mut t = 0.5 * (a + b);
    // the identity transform must never be beaten by convergence slack
    if nll_at(1.0) <= nll_at(t) {
        t = 1.0;
    }
    Ok(TempParams { t })
}

/// Elementwise `sigmoid(logit(p) / T)`.
pub fn temperature_apply(params: &TempParams, probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .map(|&p| sigmoid(logit(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)) / params.t))
        .collect()
}
