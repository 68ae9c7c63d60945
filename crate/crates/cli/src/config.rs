//! JSON experiment configuration. Every field has a default, so `{}`
//! is a complete config.

use std::path::Path;

use probcal::cape::{CapeConfig, CapeEstimator, CapeMode};
use probcal::loss::LossKind;
use probcal::model::Arch;
use probcal::synthgen::Scenario;
use probcal::train::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    /// Train / validation / test fractions.
    pub split: (f64, f64, f64),
    pub model: ModelSection,
    pub train: TrainSection,
    pub cape: CapeSection,
    pub methods: Vec<Method>,
    pub ensemble_size: usize,
    pub focal_beta: f64,
    pub entropy_beta: f64,
    pub metric_bins: usize,
    /// Bootstrap replicate count; zero disables interval columns.
    pub bootstrap: usize,
    pub seed: u64,
    pub out_dir: Option<String>,
    pub earlylearn: Option<EarlylearnSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSection::default(),
            split: (0.7, 0.15, 0.15),
            model: ModelSection::default(),
            train: TrainSection::default(),
            cape: CapeSection::default(),
            methods: vec![Method::CeEarlyStop],
            ensemble_size: 5,
            focal_beta: 2.0,
            entropy_beta: 0.5,
            metric_bins: 15,
            bootstrap: 0,
            seed: 0,
            out_dir: None,
            earlylearn: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    pub scenario: Scenario,
    pub n: usize,
    pub dim: usize,
    pub noise_sd: f64,
    /// Norm of the planted parameter (logistic datasets).
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Scenario,
    Logistic,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: DatasetKind::Scenario,
            scenario: Scenario::Linear,
            n: 20_000,
            dim: 16,
            noise_sd: 0.05,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub arch: ArchKind,
    pub hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Logistic,
    Mlp,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            arch: ArchKind::Mlp,
            hidden: 32,
        }
    }
}

impl ModelSection {
    pub fn arch(&self, dim: usize) -> Arch {
        match self.arch {
            ArchKind::Logistic => Arch::Logistic { dim },
            ArchKind::Mlp => Arch::Mlp {
                dim,
                hidden: self.hidden,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub clamp_eps: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            loss: LossKind::CrossEntropy,
            lr: d.lr,
            epochs: d.epochs,
            batch_size: d.batch_size,
            patience: d.patience,
            clamp_eps: d.clamp_eps,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64, loss_kind: LossKind, resample: bool) -> TrainConfig {
        TrainConfig {
            loss_kind,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            seed,
            resample,
            clamp_eps: self.clamp_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapeSection {
    pub m: usize,
    pub estimator: EstimatorKind,
    pub bins: usize,
    /// Kernel neighborhood; `null` means a tenth of the training set.
    pub kernel_r: Option<usize>,
    pub kernel_sigma: f64,
    pub mode: ModeKind,
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Bin,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Alternating,
    Weighted,
}

impl Default for CapeSection {
    fn default() -> Self {
        let d = CapeConfig::default();
        CapeSection {
            m: d.m,
            estimator: EstimatorKind::Bin,
            bins: 20,
            kernel_r: None,
            kernel_sigma: 0.05,
            mode: ModeKind::Alternating,
            lambda: 0.5,
            epochs: d.epochs,
            lr: d.lr,
            batch_size: d.batch_size,
        }
    }
}

impl CapeSection {
    pub fn estimator_for(&self, kind: EstimatorKind, n_train: usize) -> CapeEstimator {
        match kind {
            EstimatorKind::Bin => CapeEstimator::Bin(self.bins),
            EstimatorKind::Kernel => CapeEstimator::Kernel {
                r: self.kernel_r.unwrap_or_else(|| CapeConfig::default_kernel_r(n_train)),
                sigma: self.kernel_sigma,
            },
        }
    }

    pub fn to_cape_config(&self, seed: u64, kind: EstimatorKind, n_train: usize) -> CapeConfig {
        CapeConfig {
            m: self.m,
            estimator: self.estimator_for(kind, n_train),
            mode: match self.mode {
                ModeKind::Alternating => CapeMode::Alternating,
                ModeKind::Weighted => CapeMode::Weighted(self.lambda),
            },
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            seed,
            clamp_eps: probcal::loss::DEFAULT_CLAMP_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarlylearnSection {
    pub trajectory: Option<TrajectorySection>,
    pub sweep: Option<SweepSection>,
}

impl Default for EarlylearnSection {
    fn default() -> Self {
        EarlylearnSection {
            trajectory: None,
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub n: usize,
    pub dim: usize,
    pub gamma: f64,
    pub gamma0: f64,
    pub eta: f64,
    pub steps: usize,
    pub eval_every: usize,
    pub resample: bool,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySection {
            n: 500,
            dim: 500,
            gamma: 1.0,
            gamma0: 1.0,
            eta: 0.5,
            steps: 20_000,
            eval_every: 250,
            resample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub kappas: Vec<f64>,
    pub n: usize,
    pub gamma: f64,
    pub trials: usize,
    pub gd_steps: usize,
    pub eta: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kappas: vec![0.05, 0.5, 2.0, 5.0, 10.0],
            n: 500,
            gamma: 1.0,
            trials: 50,
            gd_steps: 300,
            eta: 0.5,
        }
    }
}

/// Experiment methods, named as they appear in the metrics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CeEarlyStop,
    CeResampled,
    Platt,
    Temperature,
    Focal,
    Entropy,
    DeepEnsemble,
    CapeBin,
    CapeKernel,
    CapeFromScratch,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::CeEarlyStop => "ce_early_stop",
            Method::CeResampled => "ce_resampled",
            Method::Platt => "platt",
            Method::Temperature => "temperature",
            Method::Focal => "focal",
            Method::Entropy => "entropy",
            Method::DeepEnsemble => "deep_ensemble",
            Method::CapeBin => "cape_bin",
            Method::CapeKernel => "cape_kernel",
            Method::CapeFromScratch => "cape_from_scratch",
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let config = match path {
        None => ExperimentConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(ConfigError::Io)?;
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?
        }
    };
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    if config.methods.is_empty() {
        return Err(ConfigError::Invalid("at least one method required".into()));
    }
    let (a, b, c) = config.split;
    if (a + b + c - 1.0).abs() > 1e-9 || [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(ConfigError::Invalid("split fractions must lie in [0,1] and sum to 1".into()));
    }
    if config.dataset.n == 0 || config.dataset.dim == 0 {
        return Err(ConfigError::Invalid("dataset n and dim must be >= 1".into()));
    }
    if config.train.lr <= 0.0 || config.cape.lr <= 0.0 {
        return Err(ConfigError::Invalid("learning rates must be > 0".into()));
    }
    if config.metric_bins == 0 {
        return Err(ConfigError::Invalid("metric_bins must be >= 1".into()));
    }
    if config.ensemble_size == 0 {
        return Err(ConfigError::Invalid("ensemble_size must be >= 1".into()));
    }
    if config.methods.contains(&Method::DeepEnsemble) && config.ensemble_size < 2 {
        return Err(ConfigError::Invalid("deep_ensemble needs ensemble_size >= 2".into()));
    }
    Ok(())
}
