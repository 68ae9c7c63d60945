//! Desk-scale probability estimation toolkit.
//!
//! Estimating outcome probabilities from data with inherent randomness
//! is not the same problem as classification: a model can score well on
//! accuracy while its probabilities are badly off. This crate bundles
//! what a study of that gap needs: calibration and scoring metrics,
//! small differentiable predictors with seeded training, synthetic
//! benchmark generators with known ground-truth probabilities,
//! calibrated training that alternates a discrimination and a
//! calibration loss, post-hoc recalibration baselines, and a numerical
//! reproduction of the early-learning/memorization transition in
//! high-dimensional logistic models.
//!
//! Everything randomized is driven by per-purpose streams derived from
//! a master seed (see [`rng`]), so experiment outputs are
//! bit-reproducible. Data-parallel helpers in [`par`] use rayon under
//! the default `parallel` feature and fall back to sequential loops
//! without it; results are identical either way.

pub mod cape;
pub mod data;
pub mod earlylearn;
pub mod error;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod model;
pub mod par;
pub mod recal;
pub mod rng;
pub mod synthgen;
pub mod train;

pub use error::{Error, Result};
