//! Training losses with exact analytic gradients.
//!
//! Every loss clamps the model output to `[eps, 1 - eps]` before taking
//! logarithms; the gradients are those of the clamped objective, so they
//! vanish on examples whose prediction sits in a saturated region. The
//! clamp is applied in logit space (`|logit| <= ln((1-eps)/eps)`, the
//! same interval) and loss values are evaluated through softplus, which
//! keeps them accurate even for saturated predictions.

use serde::{Deserialize, Serialize};

use crate::math::{sigmoid, softplus};
use crate::model::{Batch, ModelParams};

pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Focal(f64),
    EntropyPenalty(f64),
}

fn clamp_bound(eps: f64) -> f64 {
    ((1.0 - eps) / eps).ln()
}

/// Cross-entropy of a possibly soft target `t` against the prediction
/// with logit `u`. Returns `(loss, d loss / d p)`.
pub(crate) fn soft_ce_logit(u: f64, t: f64, eps: f64) -> (f64, f64) {
    let ub = clamp_bound(eps);
    let uc = u.clamp(-ub, ub);
    let loss = t * softplus(-uc) + (1.0 - t) * softplus(uc);
    let dldp = if u < -ub || u > ub {
        0.0
    } else {
        let p = sigmoid(u);
        (p - t) / (p * (1.0 - p))
    };
    (loss, dldp)
}

/// Probability-space twin of [`soft_ce_logit`], used where only a
/// probability is available (validation records, reporting).
pub(crate) fn soft_ce(p: f64, t: f64, eps: f64) -> (f64, f64) {
    let pc = p.clamp(eps, 1.0 - eps);
    let loss = -(t * pc.ln() + (1.0 - t) * (1.0 - pc).ln());
    let dldp = if p < eps || p > 1.0 - eps {
        0.0
    } else {
        (p - t) / (p * (1.0 - p))
    };
    (loss, dldp)
}

fn focal_logit(u: f64, y: f64, beta: f64, eps: f64) -> (f64, f64) {
    // uy is the logit of the probability assigned to the observed label
    let (uy, duy_dp_sign) = if y >= 0.5 { (u, 1.0) } else { (-u, -1.0) };
    let ub = clamp_bound(eps);
    let uyc = uy.clamp(-ub, ub);
    let loss = sigmoid(-uyc).powf(beta) * softplus(-uyc);
    if uy < -ub || uy > ub {
        return (loss, 0.0);
    }
    let q = sigmoid(uy);
    let dl_dq = if beta == 0.0 {
        -1.0 / q
    } else {
        beta * (1.0 - q).powf(beta - 1.0) * q.ln() - (1.0 - q).powf(beta) / q
    };
    // dq/dp is +-1 depending on the observed label
    (loss, dl_dq * duy_dp_sign)
}

fn entropy_penalty_logit(u: f64, y: f64, beta: f64, eps: f64) -> (f64, f64) {
    let (ce, dce) = soft_ce_logit(u, y, eps);
    let ub = clamp_bound(eps);
    let uc = u.clamp(-ub, ub);
    let entropy = sigmoid(uc) * softplus(-uc) + sigmoid(-uc) * softplus(uc);
    let dldp = if u < -ub || u > ub {
        0.0
    } else {
        // dH/dp = -logit(p) = -u
        dce + beta * u
    };
    (ce - beta * entropy, dldp)
}

/// Mean cross-entropy against the observed outcomes and its gradient.
pub fn ce_loss_grad(params: &ModelParams, batch: &Batch<'_>, eps: f64) -> (f64, Vec<f64>) {
    params.batch_loss_grad(batch, |u, _p, t| soft_ce_logit(u, t, eps))
}

/// Mean focal loss and its gradient. `beta = 0` coincides with
/// cross-entropy.
pub fn focal_loss_grad(
    params: &ModelParams,
    batch: &Batch<'_>,
    beta: f64,
    eps: f64,
) -> (f64, Vec<f64>) {
    params.batch_loss_grad(batch, |u, _p, t| focal_logit(u, t, beta, eps))
}

/// Mean cross-entropy minus `beta` times the output entropy, with
/// gradient.
pub fn entropy_penalty_loss_grad(
    params: &ModelParams,
    batch: &Batch<'_>,
    beta: f64,
    eps: f64,
) -> (f64, Vec<f64>) {
    params.batch_loss_grad(batch, |u, _p, t| entropy_penalty_logit(u, t, beta, eps))
}

impl LossKind {
    pub(crate) fn loss_grad(
        &self,
        params: &ModelParams,
        batch: &Batch<'_>,
        eps: f64,
    ) -> (f64, Vec<f64>) {
        match *self {
            LossKind::CrossEntropy => ce_loss_grad(params, batch, eps),
            LossKind::Focal(beta) => focal_loss_grad(params, batch, beta, eps),
            LossKind::EntropyPenalty(beta) => entropy_penalty_loss_grad(params, batch, beta, eps),
        }
    }
}
