//! Differentiable probability predictors.
//!
//! Two architectures: a bias-free logistic model `sigmoid(<theta, x>)`
//! and a one-hidden-layer rectified-linear network
//! `sigmoid(w2 . relu(W1 x + b1) + b2)`. Weights live in one flat
//! vector per model; the layout is documented on [`Arch`].

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{dot, sigmoid};
use crate::rng;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Architecture descriptor.
///
/// Flat weight layouts:
/// - `Logistic { dim }`: `[theta_0 .. theta_{dim-1}]`
/// - `Mlp { dim, hidden }`: `[W1 (hidden x dim, row-major), b1 (hidden),
///   w2 (hidden), b2]`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arch {
    Logistic { dim: usize },
    Mlp { dim: usize, hidden: usize },
}

impl Arch {
    pub fn input_dim(&self) -> usize {
        match *self {
            Arch::Logistic { dim } => dim,
            Arch::Mlp { dim, .. } => dim,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            Arch::Logistic { dim } => dim,
            Arch::Mlp { dim, hidden } => hidden * dim + hidden + hidden + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    arch: Arch,
    weights: Vec<f64>,
}

/// Scratch space reused across forward/backward calls within a batch.
#[derive(Default)]
struct MlpScratch {
    pre: Vec<f64>,
    act: Vec<f64>,
}

impl ModelParams {
    pub fn new(arch: Arch, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != arch.param_count() {
            return Err(Error::invalid_argument(format!(
                "{} weights supplied, arch {:?} needs {}",
                weights.len(),
                arch,
                arch.param_count()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid_argument("non-finite weight"));
        }
        Ok(Self { arch, weights })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Seeded Gaussian initialization with standard deviation
    /// 1/sqrt(fan-in) per layer.
    pub fn init(arch: Arch, seed: u64) -> Self {
        let mut stream = rng::stream(seed, "init");
        Self::init_from(arch, &mut stream)
    }

    pub fn init_from(arch: Arch, stream: &mut rng::Stream) -> Self {
        let mut weights = vec![0.0; arch.param_count()];
        match arch {
            Arch::Logistic { dim } => {
                let sd = 1.0 / (dim as f64).sqrt();
                for w in &mut weights {
                    *w = sd * stream.sample::<f64, _>(StandardNormal);
                }
            }
            Arch::Mlp { dim, hidden } => {
                let sd1 = 1.0 / (dim as f64).sqrt();
                let sd2 = 1.0 / (hidden as f64).sqrt();
                let n1 = hidden * dim + hidden;
                for w in &mut weights[..n1] {
                    *w = sd1 * stream.sample::<f64, _>(StandardNormal);
                }
                for w in &mut weights[n1..] {
                    *w = sd2 * stream.sample::<f64, _>(StandardNormal);
                }
            }
        }
        Self { arch, weights }
    }

    /// Logistic parameters drawn uniformly from the sphere of the given
    /// radius, the initialization used by the linear-model experiments.
    pub fn logistic_on_sphere(dim: usize, radius: f64, stream: &mut rng::Stream) -> Self {
        let mut theta: Vec<f64> = (0..dim)
            .map(|_| stream.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        for t in &mut theta {
            *t *= radius / norm;
        }
        Self {
            arch: Arch::Logistic { dim },
            weights: theta,
        }
    }

    /// Predicted probability for one feature row, strictly inside (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::invalid_argument(format!(
                "input width {} does not match arch input dim {}",
                x.len(),
                self.arch.input_dim()
            )));
        }
        Ok(self.forward_unchecked(x, &mut MlpScratch::default()))
    }

    /// Pre-sigmoid output, filling the hidden-layer scratch for MLPs.
    fn forward_logit(&self, x: &[f64], scratch: &mut MlpScratch) -> f64 {
        match self.arch {
            Arch::Logistic { .. } => dot(&self.weights, x),
            Arch::Mlp { dim, hidden } => {
                let (w1, rest) = self.weights.split_at(hidden * dim);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden);
                scratch.pre.resize(hidden, 0.0);
                scratch.act.resize(hidden, 0.0);
                for h in 0..hidden {
                    let pre = dot(&w1[h * dim..(h + 1) * dim], x) + b1[h];
                    scratch.pre[h] = pre;
                    scratch.act[h] = pre.max(0.0);
                }
                dot(w2, &scratch.act) + b2[0]
            }
        }
    }

    fn forward_unchecked(&self, x: &[f64], scratch: &mut MlpScratch) -> f64 {
        sigmoid(self.forward_logit(x, scratch))
    }

    /// Predictions for every row of a flat matrix.
    pub fn predict_batch(&self, features: &[f64], dim: usize) -> Result<Vec<f64>> {
        if dim != self.arch.input_dim() {
            return Err(Error::invalid_argument(format!(
                "input width {dim} does not match arch input dim {}",
                self.arch.input_dim()
            )));
        }
        let mut scratch = MlpScratch::default();
        Ok(features
            .chunks_exact(dim)
            .map(|row| self.forward_unchecked(row, &mut scratch))
            .collect())
    }

    pub fn predict_dataset(&self, ds: &crate::data::LabeledDataset, idx: &[usize]) -> Result<Vec<f64>> {
        if ds.dim() != self.arch.input_dim() {
            return Err(Error::invalid_argument("dataset dim does not match model"));
        }
        let mut scratch = MlpScratch::default();
        Ok(idx
            .iter()
            .map(|&i| self.forward_unchecked(ds.row(i), &mut scratch))
            .collect())
    }

    /// Mean per-example loss over a batch plus its exact gradient in the
    /// flat weight layout. `per_example` maps the output logit, the
    /// prediction, and the target to `(loss, d loss / d prediction)`;
    /// losses evaluate from the logit so saturated examples keep full
    /// precision.
    pub fn batch_loss_grad<F>(&self, batch: &Batch<'_>, per_example: F) -> (f64, Vec<f64>)
    where
        F: Fn(f64, f64, f64) -> (f64, f64),
    {
        let m = batch.len();
        assert!(m > 0, "batch must be nonempty");
        let inv = 1.0 / m as f64;
        let mut grad = vec![0.0; self.arch.param_count()];
        let mut total = 0.0;
        let mut scratch = MlpScratch::default();

        for (row, &target) in batch
            .features
            .chunks_exact(batch.dim)
            .zip(batch.targets.iter())
        {
            let u = self.forward_logit(row, &mut scratch);
            let p = sigmoid(u);
            let (loss, dldp) = per_example(u, p, target);
            total += loss;
            if dldp == 0.0 {
                continue;
            }
            // d p / d logit for the sigmoid output
            let dl = dldp * p * (1.0 - p) * inv;
            match self.arch {
                Arch::Logistic { .. } => {
                    for (g, &xj) in grad.iter_mut().zip(row) {
                        *g += dl * xj;
                    }
                }
                Arch::Mlp { dim, hidden } => {
                    let w2_off = hidden * dim + hidden;
                    let (gw1, grest) = grad.split_at_mut(hidden * dim);
                    let (gb1, grest) = grest.split_at_mut(hidden);
                    let (gw2, gb2) = grest.split_at_mut(hidden);
                    let w2 = &self.weights[w2_off..w2_off + hidden];
                    for h in 0..hidden {
                        gw2[h] += dl * scratch.act[h];
                        if scratch.pre[h] > 0.0 {
                            let dh = dl * w2[h];
                            gb1[h] += dh;
                            let gw1h = &mut gw1[h * dim..(h + 1) * dim];
                            for (g, &xj) in gw1h.iter_mut().zip(row) {
                                *g += dh * xj;
                            }
                        }
                    }
                    gb2[0] += dl;
                }
            }
        }
        (total * inv, grad)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = Checkpoint {
            version: CHECKPOINT_VERSION,
            arch: self.arch,
            weights: self.weights.clone(),
        };
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        let file: Checkpoint = serde_json::from_reader(r)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        ModelParams::new(file.arch, file.weights)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    arch: Arch,
    weights: Vec<f64>,
}

/// Borrowed mini-batch: a flat feature block and per-example targets.
/// Targets are observed outcomes for the discrimination losses and
/// empirical probabilities for the calibration loss.
pub struct Batch<'a> {
    pub features: &'a [f64],
    pub dim: usize,
    pub targets: &'a [f64],
}

impl<'a> Batch<'a> {
    pub fn new(features: &'a [f64], dim: usize, targets: &'a [f64]) -> Self {
        assert_eq!(features.len(), dim * targets.len());
        Self {
            features,
            dim,
            targets,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Arithmetic mean of member predictions.
pub fn ensemble_predict(models: &[ModelParams], x: &[f64]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::invalid_argument("ensemble must contain at least one model"));
    }
    let arch = models[0].arch();
    if models.iter().any(|m| m.arch() != arch) {
        return Err(Error::invalid_argument("ensemble members must share an architecture"));
    }
    let mut sum = 0.0;
    for m in models {
        sum += m.forward(x)?;
    }
    Ok(sum / models.len() as f64)
}
