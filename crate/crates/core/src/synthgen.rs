//! Synthetic benchmark generators.
//!
//! Scenario datasets tie a scalar latent `z` (an "age" drawn uniformly
//! from {1..100}) to a ground-truth probability through one of five
//! shapes, then embed `z` in a `d`-dimensional feature vector as a
//! noisy signal coordinate plus Gaussian distractors. Logistic datasets
//! draw standard Gaussian features and label them through a planted
//! parameter vector.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::rng;

/// Shape of the latent-to-probability map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Equally spaced probabilities: z/100.
    Linear,
    /// Concentrated near the extremes: sigmoid(25(z/100 - 0.29)).
    Sigmoid,
    /// Clustered close to zero: z/250.
    Skewed,
    /// Clustered in the center: z/300 + 0.35.
    Centered,
    /// Five-level staircase over z in steps of 20.
    Discrete,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Linear,
        Scenario::Sigmoid,
        Scenario::Skewed,
        Scenario::Centered,
        Scenario::Discrete,
    ];
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Linear => "linear",
            Scenario::Sigmoid => "sigmoid",
            Scenario::Skewed => "skewed",
            Scenario::Centered => "centered",
            Scenario::Discrete => "discrete",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Scenario::Linear),
            "sigmoid" => Ok(Scenario::Sigmoid),
            "skewed" => Ok(Scenario::Skewed),
            "centered" => Ok(Scenario::Centered),
            "discrete" => Ok(Scenario::Discrete),
            other => Err(Error::invalid_argument(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Probability assigned to latent `z` by the scenario. `z` must lie in [1, 100].
pub fn scenario_prob(scenario: Scenario, z: f64) -> Result<f64> {
    if !(1.0..=100.0).contains(&z) {
        return Err(Error::invalid_argument(format!("latent {z} outside [1,100]")));
    }
    let p = match scenario {
        Scenario::Linear => z / 100.0,
        Scenario::Sigmoid => sigmoid(25.0 * (z / 100.0 - 0.29)),
        Scenario::Skewed => z / 250.0,
        Scenario::Centered => z / 300.0 + 0.35,
        Scenario::Discrete => {
            let steps = [20.0, 40.0, 60.0, 80.0]
                .iter()
                .filter(|&&t| z > t)
                .count();
            0.2 * steps as f64 + 0.1
        }
    };
    Ok(p)
}

/// Planted high-dimensional logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModelSpec {
    pub dim: usize,
    pub gamma: f64,
    pub theta_star: Vec<f64>,
}

impl LogisticModelSpec {
    pub fn new(dim: usize, gamma: f64, theta_star: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid_argument("dim must be >= 1"));
        }
        if gamma <= 0.0 {
            return Err(Error::invalid_argument("gamma must be > 0"));
        }
        if theta_star.len() != dim {
            return Err(Error::invalid_argument("theta_star length must equal dim"));
        }
        let norm = theta_star.iter().map(|t| t * t).sum::<f64>().sqrt();
        if (norm - gamma).abs() > 1e-9 {
            return Err(Error::invalid_argument(format!(
                "||theta_star|| = {norm} but gamma = {gamma}"
            )));
        }
        Ok(Self {
            dim,
            gamma,
            theta_star,
        })
    }

    /// `gamma * e_1`, the default planted parameter.
    pub fn first_axis(dim: usize, gamma: f64) -> Result<Self> {
        let mut theta = vec![0.0; dim];
        if dim > 0 {
            theta[0] = gamma;
        }
        Self::new(dim, gamma, theta)
    }
}

/// Draw one Bernoulli outcome per probability, deterministically under
/// the `(seed, "outcomes")` stream.
pub fn sample_outcomes(probs: &[f64], seed: u64) -> Result<Vec<u8>> {
    sample_outcomes_with_stream(probs, &mut rng::stream(seed, "outcomes"))
}

/// Bernoulli draws from a caller-supplied stream.
pub fn sample_outcomes_with_stream(probs: &[f64], stream: &mut rng::Stream) -> Result<Vec<u8>> {
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid_argument("probability outside [0,1]"));
    }
    Ok(probs
        .iter()
        .map(|&p| u8::from(stream.gen::<f64>() < p))
        .collect())
}

/// Fresh outcome labels for one epoch of infinite-data training.
/// Epochs index independent streams derived from `(seed, epoch)`.
pub fn resample_outcomes(dataset: &LabeledDataset, epoch: u64, seed: u64) -> Result<Vec<u8>> {
    let truth = dataset
        .truth_probs
        .as_ref()
        .ok_or_else(|| Error::InvalidState("resampling requires truth_probs".into()))?;
    sample_outcomes_with_stream(truth, &mut rng::indexed_stream(seed, "resample", epoch))
}

/// Scenario dataset: latent ages, truth probabilities, noisy signal
/// coordinate plus `d - 1` standard-normal distractors.
pub fn generate_scenario_dataset(
    scenario: Scenario,
    n: usize,
    d: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 || d == 0 {
        return Err(Error::invalid_argument("n and d must be >= 1"));
    }
    if noise_sd < 0.0 {
        return Err(Error::invalid_argument("noise_sd must be >= 0"));
    }
    let mut latent_stream = rng::stream(seed, "latent");
    let mut noise_stream = rng::stream(seed, "features");

    let mut latent = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z = latent_stream.gen_range(1..=100) as f64;
        latent.push(z);
        truth.push(scenario_prob(scenario, z)?);
        let eps: f64 = noise_stream.sample(StandardNormal);
        features.push(z / 100.0 + noise_sd * eps);
        for _ in 1..d {
            features.push(noise_stream.sample::<f64, _>(StandardNormal));
        }
    }
    let outcomes = sample_outcomes_with_stream(&truth, &mut rng::stream(seed, "outcomes"))?;
    LabeledDataset::new(features, d, outcomes, Some(truth), Some(latent))
}

/// Logistic dataset: iid standard Gaussian features, truth
/// sigmoid(<theta*, x>), Bernoulli outcomes.
pub fn generate_logistic_dataset(
    spec: &LogisticModelSpec,
    n: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::invalid_argument("n must be >= 1"));
    }
    let d = spec.dim;
    let mut feat_stream = rng::stream(seed, "features");
    let mut features = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        features.push(feat_stream.sample::<f64, _>(StandardNormal));
    }
    let truth: Vec<f64> = (0..n)
        .map(|i| sigmoid(crate::math::dot(&features[i * d..(i + 1) * d], &spec.theta_star)))
        .collect();
    let outcomes = sample_outcomes_with_stream(&truth, &mut rng::stream(seed, "outcomes"))?;
    LabeledDataset::new(features, d, outcomes, Some(truth), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_fixture_values() {
        assert_eq!(scenario_prob(Scenario::Linear, 50.0).unwrap(), 0.5);
        assert!((scenario_prob(Scenario::Sigmoid, 29.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(scenario_prob(Scenario::Discrete, 50.0).unwrap(), 0.5);
        assert!((scenario_prob(Scenario::Skewed, 100.0).unwrap() - 0.4).abs() < 1e-12);
        assert!((scenario_prob(Scenario::Centered, 30.0).unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn psi_rejects_out_of_range_latent() {
        assert!(scenario_prob(Scenario::Linear, 0.5).is_err());
        assert!(scenario_prob(Scenario::Linear, 100.5).is_err());
    }

    #[test]
    fn psi_range_containment_and_monotonicity() {
        let mut stream = rng::stream(0, "psi-range");
        for _ in 0..10_000 {
            let z = stream.gen_range(1.0..=100.0);
            let bounds = [
                (Scenario::Linear, 0.01, 1.0),
                (Scenario::Skewed, 0.004, 0.4),
                (Scenario::Centered, 1.0 / 300.0 + 0.35, 100.0 / 300.0 + 0.35),
                (Scenario::Sigmoid, 0.0, 1.0),
            ];
            for (sc, lo, hi) in bounds {
                let p = scenario_prob(sc, z).unwrap();
                assert!(p >= lo && p <= hi, "{sc} out of range at z={z}: {p}");
                if sc == Scenario::Sigmoid {
                    assert!(p > 0.0 && p < 1.0);
                }
            }
            let pd = scenario_prob(Scenario::Discrete, z).unwrap();
            assert!([0.1, 0.3, 0.5, 0.7, 0.9].iter().any(|v| (pd - v).abs() < 1e-12));
        }
        for sc in Scenario::ALL {
            let mut prev = f64::NEG_INFINITY;
            for zi in 1..=1000 {
                let z = 1.0 + 99.0 * (zi as f64 - 1.0) / 999.0;
                let p = scenario_prob(sc, z).unwrap();
                assert!(p >= prev - 1e-15, "{sc} decreases at z={z}");
                prev = p;
            }
        }
    }

    #[test]
    fn zero_noise_signal_coordinate_is_exact() {
        let ds = generate_scenario_dataset(Scenario::Linear, 50, 1, 0.0, 3).unwrap();
        let latent = ds.latent.as_ref().unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.row(i)[0], latent[i] / 100.0);
        }
    }

    #[test]
    fn linear_outcome_mean_matches_expected_psi_mean() {
        let ds = generate_scenario_dataset(Scenario::Linear, 20_000, 4, 0.05, 11).unwrap();
        let mean = ds.outcomes.iter().map(|&y| y as f64).sum::<f64>() / ds.len() as f64;
        // E[psi(Z)] = 0.505 for Z uniform on {1..100}
        assert!((0.48..=0.53).contains(&mean), "outcome mean {mean}");
    }

    #[test]
    fn scenario_generation_is_deterministic() {
        let a = generate_scenario_dataset(Scenario::Centered, 100, 5, 0.05, 9).unwrap();
        let b = generate_scenario_dataset(Scenario::Centered, 100, 5, 0.05, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_outcomes_degenerate_probs() {
        assert_eq!(sample_outcomes(&[0.0; 20], 5).unwrap(), vec![0; 20]);
        assert_eq!(sample_outcomes(&[1.0; 20], 5).unwrap(), vec![1; 20]);
    }

    #[test]
    fn sample_outcomes_concentrates() {
        let probs = vec![0.5; 10_000];
        let ys = sample_outcomes(&probs, 123).unwrap();
        let mean = ys.iter().map(|&y| y as f64).sum::<f64>() / ys.len() as f64;
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
    }

    #[test]
    fn resample_is_deterministic_per_epoch_and_fresh_across_epochs() {
        let ds = generate_scenario_dataset(Scenario::Linear, 10_000, 1, 0.0, 77).unwrap();
        let e3a = resample_outcomes(&ds, 3, 5).unwrap();
        let e3b = resample_outcomes(&ds, 3, 5).unwrap();
        assert_eq!(e3a, e3b);

        let flat = LabeledDataset::new(
            vec![0.0; 10_000],
            1,
            vec![0; 10_000],
            Some(vec![0.5; 10_000]),
            None,
        )
        .unwrap();
        let e1 = resample_outcomes(&flat, 1, 5).unwrap();
        let e2 = resample_outcomes(&flat, 2, 5).unwrap();
        let hamming = e1.iter().zip(&e2).filter(|(a, b)| a != b).count() as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&hamming), "hamming {hamming}");
    }

    #[test]
    fn resample_certain_probs_is_constant() {
        let ds = LabeledDataset::new(vec![0.0; 8], 1, vec![0; 8], Some(vec![1.0; 8]), None).unwrap();
        for epoch in 0..4 {
            assert_eq!(resample_outcomes(&ds, epoch, 1).unwrap(), vec![1; 8]);
        }
    }

    #[test]
    fn resample_without_truth_is_invalid_state() {
        let ds = LabeledDataset::new(vec![0.0; 4], 1, vec![0; 4], None, None).unwrap();
        assert!(matches!(
            resample_outcomes(&ds, 0, 0),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn logistic_dataset_truth_is_sigmoid_of_projection() {
        let spec = LogisticModelSpec::first_axis(5, 2.0).unwrap();
        let ds = generate_logistic_dataset(&spec, 200, 4).unwrap();
        let truth = ds.truth_probs.as_ref().unwrap();
        for i in 0..ds.len() {
            assert!((truth[i] - sigmoid(2.0 * ds.row(i)[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_truth_mean_is_half_by_symmetry() {
        let spec = LogisticModelSpec::first_axis(3, 1.0).unwrap();
        let ds = generate_logistic_dataset(&spec, 50_000, 21).unwrap();
        let mean = crate::math::mean(ds.truth_probs.as_ref().unwrap());
        assert!((0.49..=0.51).contains(&mean), "truth mean {mean}");
    }

    #[test]
    fn logistic_dataset_shape_matches_spec() {
        let spec = LogisticModelSpec::first_axis(500, 1.0).unwrap();
        let ds = generate_logistic_dataset(&spec, 500, 0).unwrap();
        assert_eq!(ds.len(), 500);
        assert_eq!(ds.dim(), 500);
    }

    #[test]
    fn model_spec_validates_norm() {
        assert!(LogisticModelSpec::new(2, 1.0, vec![1.0, 1.0]).is_err());
        assert!(LogisticModelSpec::new(2, 2f64.sqrt(), vec![1.0, 1.0]).is_ok());
    }
}
