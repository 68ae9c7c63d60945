//! Numerical study of early learning and memorization in
//! high-dimensional logistic models.
//!
//! Full-batch gradient descent on cross-entropy over a planted logistic
//! dataset, tracking the mean squared error of the predicted
//! probabilities on held-out Gaussian inputs, the training
//! cross-entropy, and the fraction of training predictions collapsed
//! to 0/1. Separability is decided exactly by solving the
//! nearest-point-to-origin problem over the convex hull of the signed
//! examples; the dimension-ratio sweep reports how the separability
//! rate and the collapse level move with kappa = p/n.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{dot, sigmoid};
use crate::model::ModelParams;
use crate::par;
use crate::rng;
use crate::synthgen::{generate_logistic_dataset, LogisticModelSpec};

/// Held-out sample size for the Monte Carlo MSE estimate. Standard
/// error stays below 0.005, under every gap asserted on trajectories.
const HOLDOUT_SIZE: usize = 5000;

/// Clamp for the training cross-entropy record; memorized margins
/// otherwise produce infinities.
const CE_CLAMP: f64 = 1e-15;

/// Tolerance used both for predictions counted as collapsed in sweep
/// summaries and for the separability margin threshold.
const MARGIN_TOL: f64 = 1e-9;

pub const COLLAPSE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n: usize,
    pub dim: usize,
    pub gamma: f64,
    pub gamma0: f64,
    pub eta: f64,
    pub steps: usize,
    pub eval_every: usize,
    /// Redraw outcome labels from the truth probabilities before every
    /// step, emulating the infinite-data regime.
    pub resample: bool,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            n: 500,
            dim: 500,
            gamma: 1.0,
            gamma0: 1.0,
            eta: 0.5,
            steps: 20_000,
            eval_every: 250,
            resample: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub k: usize,
    pub mse_p: f64,
    pub train_ce: f64,
    pub collapse_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn min_mse(&self) -> f64 {
        self.points.iter().map(|p| p.mse_p).fold(f64::INFINITY, f64::min)
    }

    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least the k=0 record")
    }
}

/// Fraction of probabilities within `tol` of 0 or 1.
pub fn collapse_fraction(probs: &[f64], tol: f64) -> Result<f64> {
    if !(0.0 < tol && tol < 0.5) {
        return Err(Error::invalid_argument("tol must lie in (0, 0.5)"));
    }
    if probs.is_empty() {
        return Err(Error::invalid_argument("empty input"));
    }
    let hits = probs.iter().filter(|&&p| p <= tol || p >= 1.0 - tol).count();
    Ok(hits as f64 / probs.len() as f64)
}

/// Largest singular value of the flat row-major `n x p` matrix, by
/// power iteration on X^T X. Sixty rounds are ample for the separated
/// top edge of Gaussian matrices.
fn spectral_norm(x: &[f64], n: usize, p: usize, seed: u64) -> f64 {
    let mut v: Vec<f64> = {
        let mut s = rng::stream(seed, "power-iteration");
        (0..p).map(|_| s.sample::<f64, _>(StandardNormal)).collect()
    };
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..60 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = dot(&x[i * p..(i + 1) * p], &v);
        }
        let mut next = vec![0.0; p];
        for (i, &wi) in w.iter().enumerate() {
            let row = &x[i * p..(i + 1) * p];
            for (nj, &xj) in next.iter_mut().zip(row) {
                *nj += wi * xj;
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        lambda = norm;
        for (vi, ni) in v.iter_mut().zip(&next) {
            *vi = ni / norm;
        }
    }
    lambda.sqrt()
}

struct GdProblem<'a> {
    x: &'a [f64],
    n: usize,
    p: usize,
    theta: Vec<f64>,
    margins: Vec<f64>,
    preds: Vec<f64>,
}

impl<'a> GdProblem<'a> {
    fn new(x: &'a [f64], n: usize, p: usize, theta: Vec<f64>) -> Self {
        let mut prob = GdProblem {
            x,
            n,
            p,
            theta,
            margins: vec![0.0; n],
            preds: vec![0.0; n],
        };
        prob.refresh();
        prob
    }

    fn refresh(&mut self) {
        for i in 0..self.n {
            let u = dot(&self.x[i * self.p..(i + 1) * self.p], &self.theta);
            self.margins[i] = u;
            self.preds[i] = sigmoid(u);
        }
    }

    fn step(&mut self, eta: f64, y: &[f64]) {
        let inv = 1.0 / self.n as f64;
        let mut grad = vec![0.0; self.p];
        for i in 0..self.n {
            let r = (self.preds[i] - y[i]) * inv;
            if r == 0.0 {
                continue;
            }
            let row = &self.x[i * self.p..(i + 1) * self.p];
            for (g, &xj) in grad.iter_mut().zip(row) {
                *g += r * xj;
            }
        }
        for (t, g) in self.theta.iter_mut().zip(&grad) {
            *t -= eta * g;
        }
        self.refresh();
    }

    fn train_ce(&self, y: &[f64]) -> f64 {
        let n = self.n as f64;
        self.preds
            .iter()
            .zip(y)
            .map(|(&p, &yi)| {
                let pc = p.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
                -(yi * pc.ln() + (1.0 - yi) * (1.0 - pc).ln())
            })
            .sum::<f64>()
            / n
    }
}

/// Generate a planted logistic dataset and run full-batch gradient
/// descent from a uniformly random initialization on the sphere of
/// radius `gamma0`, recording the trajectory every `eval_every` steps
/// (and at step 0 and the final step).
pub fn run_trajectory(config: &TrajectoryConfig) -> Result<Trajectory> {
    if config.n == 0 || config.dim == 0 || config.steps == 0 || config.eval_every == 0 {
        return Err(Error::invalid_argument("counts must be >= 1"));
    }
    if config.eta <= 0.0 {
        return Err(Error::invalid_argument("eta must be > 0"));
    }
    let spec = LogisticModelSpec::first_axis(config.dim, config.gamma)?;
    let ds = generate_logistic_dataset(&spec, config.n, rng::derive_seed(config.seed, "el-data", 0))?;
    let (n, p) = (config.n, config.dim);
    let x = ds.features_flat();

    // descent stability: eta must stay below 2 / L where the
    // cross-entropy smoothness constant is L = ||X||^2 / (4n)
    let x_norm = spectral_norm(x, n, p, config.seed);
    let eta_max = 8.0 * n as f64 / (x_norm * x_norm);
    if config.eta >= eta_max {
        return Err(Error::invalid_argument(format!(
            "eta {} exceeds the descent stability bound {eta_max:.4}",
            config.eta
        )));
    }

    let truth = ds.truth_probs.as_ref().expect("planted dataset has truth");
    let fixed_y: Vec<f64> = ds.outcomes.iter().map(|&y| y as f64).collect();

    // held-out Monte Carlo estimate of MSE_p against the planted model
    let mut holdout_stream = rng::stream(config.seed, "el-holdout");
    let holdout: Vec<f64> = (0..HOLDOUT_SIZE * p)
        .map(|_| holdout_stream.sample::<f64, _>(StandardNormal))
        .collect();
    let holdout_truth: Vec<f64> = (0..HOLDOUT_SIZE)
        .map(|i| sigmoid(dot(&holdout[i * p..(i + 1) * p], &spec.theta_star)))
        .collect();

    let theta0 = ModelParams::logistic_on_sphere(
        p,
        config.gamma0,
        &mut rng::stream(config.seed, "el-init"),
    );
    let mut prob = GdProblem::new(x, n, p, theta0.weights().to_vec());

    let mse_of = |theta: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..HOLDOUT_SIZE {
            let q = sigmoid(dot(&holdout[i * p..(i + 1) * p], theta));
            acc += (q - holdout_truth[i]) * (q - holdout_truth[i]);
        }
        acc / HOLDOUT_SIZE as f64
    };

    let mut points = Vec::new();
    let mut record = |k: usize, prob: &GdProblem, y: &[f64]| {
        points.push(TrajectoryPoint {
            k,
            mse_p: mse_of(&prob.theta),
            train_ce: prob.train_ce(y),
            collapse_fraction: collapse_fraction(&prob.preds, COLLAPSE_TOL).unwrap(),
        });
    };

    record(0, &prob, &fixed_y);
    for k in 1..=config.steps {
        let fresh: Option<Vec<f64>> = if config.resample {
            let draws = crate::synthgen::sample_outcomes_with_stream(
                truth,
                &mut rng::indexed_stream(config.seed, "el-resample", k as u64),
            )?;
            Some(draws.into_iter().map(f64::from).collect())
        } else {
            None
        };
        let y: &[f64] = fresh.as_deref().unwrap_or(&fixed_y);
        prob.step(config.eta, y);
        if k % config.eval_every == 0 || k == config.steps {
            record(k, &prob, y);
        }
    }
    Ok(Trajectory { points })
}

/// Decide linear separability (through the origin) of the signed
/// examples exactly, via the dual nearest-point problem: the data are
/// separable iff the convex hull of `{(2y_i - 1) x_i}` keeps a
/// positive distance from the origin.
///
/// The Mitchell-Demyanov-Malozemov iteration stops at the first
/// certificate: a direction with all margins positive (separable) or a
/// hull point with norm below `1e-9` (not separable).
pub fn separability_check(dataset: &LabeledDataset) -> Result<bool> {
    let n = dataset.len();
    let p = dataset.dim();
    if dataset.outcomes.iter().all(|&y| y == dataset.outcomes[0]) {
        return Ok(true);
    }

    let x = dataset.features_flat();
    let signs: Vec<f64> = dataset.outcomes.iter().map(|&y| 2.0 * y as f64 - 1.0).collect();
    let z_row = |i: usize| -> Vec<f64> {
        x[i * p..(i + 1) * p].iter().map(|&v| signs[i] * v).collect()
    };

    // lazily computed Gram columns of Z Z^T
    let mut gram: Vec<Option<Vec<f64>>> = vec![None; n];
    let col = |j: usize, gram: &mut Vec<Option<Vec<f64>>>| -> Vec<f64> {
        if gram[j].is_none() {
            let zj = z_row(j);
            let column: Vec<f64> = (0..n).map(|k| signs[k] * dot(&x[k * p..(k + 1) * p], &zj)).collect();
            gram[j] = Some(column);
        }
        gram[j].clone().unwrap()
    };

    let mut lambda = vec![0.0f64; n];
    lambda[0] = 1.0;
    let mut v = col(0, &mut gram);
    let mut q_norm2 = v[0];

    let max_iters = 400_000;
    for iter in 0..max_iters {
        let q_norm = q_norm2.max(0.0).sqrt();
        if q_norm < MARGIN_TOL {
            return Ok(false);
        }
        // certificate direction q/|q|: all margins positive => separable
        let (mut i_min, mut v_min) = (0usize, f64::INFINITY);
        for (k, &vk) in v.iter().enumerate() {
            if vk < v_min {
                v_min = vk;
                i_min = k;
            }
        }
        if v_min / q_norm > MARGIN_TOL {
            return Ok(true);
        }
        let (mut i_max, mut v_max) = (0usize, f64::NEG_INFINITY);
        for (k, &lk) in lambda.iter().enumerate() {
            if lk > 0.0 && v[k] > v_max {
                v_max = v[k];
                i_max = k;
            }
        }
        if v_max - v_min <= 0.0 {
            // no descent direction; the minimum norm point is attained
            return Ok(q_norm >= MARGIN_TOL && v_min / q_norm > MARGIN_TOL);
        }

        let ci = col(i_min, &mut gram);
        let cj = col(i_max, &mut gram);
        let d2 = ci[i_min] + cj[i_max] - 2.0 * ci[i_max];
        let mut t = (v_max - v_min) / d2.max(1e-300);
        t = t.min(lambda[i_max]);
        lambda[i_min] += t;
        lambda[i_max] -= t;
        q_norm2 += 2.0 * t * (v_min - v_max) + t * t * d2;
        for k in 0..n {
            v[k] += t * (ci[k] - cj[k]);
        }

        // periodic exact refresh against drift of the incremental updates
        if iter % 4096 == 4095 {
            let mut fresh = vec![0.0; n];
            for (j, &lj) in lambda.iter().enumerate() {
                if lj > 0.0 {
                    let cjj = col(j, &mut gram);
                    for k in 0..n {
                        fresh[k] += lj * cjj[k];
                    }
                }
            }
            v = fresh;
            q_norm2 = lambda.iter().zip(&v).map(|(&l, &vk)| l * vk).sum();
        }
    }
    Err(Error::InvalidState(
        "separability undecided within the iteration budget".into(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSweepConfig {
    pub kappas: Vec<f64>,
    pub n: usize,
    pub gamma: f64,
    pub trials: usize,
    /// Full-batch descent budget used for the collapse summary.
    pub gd_steps: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for KappaSweepConfig {
    fn default() -> Self {
        KappaSweepConfig {
            kappas: vec![0.05, 0.5, 2.0, 5.0, 10.0],
            n: 500,
            gamma: 1.0,
            trials: 50,
            gd_steps: 300,
            eta: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaRow {
    pub kappa: f64,
    pub separable_rate: f64,
    pub mean_final_collapse: f64,
}

/// For each kappa, run independent trials at `p = round(kappa n)`,
/// reporting the separability frequency and the mean collapse fraction
/// after the descent budget. Trials run on disjoint seed streams and
/// may execute concurrently.
pub fn kappa_sweep(config: &KappaSweepConfig) -> Result<Vec<KappaRow>> {
    if config.trials == 0 {
        return Err(Error::invalid_argument("trials must be >= 1"));
    }
    if config.kappas.is_empty() {
        return Err(Error::invalid_argument("kappas must be nonempty"));
    }
    let mut rows = Vec::with_capacity(config.kappas.len());
    for (ki, &kappa) in config.kappas.iter().enumerate() {
        if kappa <= 0.0 {
            return Err(Error::invalid_argument("kappa must be > 0"));
        }
        let p = ((kappa * config.n as f64).round() as usize).max(1);
        let trials: Vec<Result<(bool, f64)>> = par::map_indexed(config.trials, |t| {
            let trial_seed = rng::derive_seed(config.seed, "kappa-trial", (ki * config.trials + t) as u64);
            let spec = LogisticModelSpec::first_axis(p, config.gamma)?;
            let ds = generate_logistic_dataset(&spec, config.n, trial_seed)?;
            let separable = separability_check(&ds)?;

            let x = ds.features_flat();
            let x_norm = spectral_norm(x, config.n, p, trial_seed);
            // clamp the step into the stable region for this instance
            let eta = config.eta.min(0.9 * 8.0 * config.n as f64 / (x_norm * x_norm));
            let theta0 = ModelParams::logistic_on_sphere(
                p,
                config.gamma,
                &mut rng::indexed_stream(trial_seed, "sweep-init", 0),
            );
            let y: Vec<f64> = ds.outcomes.iter().map(|&y| y as f64).collect();
            let mut prob = GdProblem::new(x, config.n, p, theta0.weights().to_vec());
            for _ in 0..config.gd_steps {
                prob.step(eta, &y);
            }
            let collapse = collapse_fraction(&prob.preds, COLLAPSE_TOL)?;
            Ok((separable, collapse))
        });
        let mut sep = 0usize;
        let mut collapse_sum = 0.0;
        for trial in trials {
            let (s, c) = trial?;
            sep += s as usize;
            collapse_sum += c;
        }
        rows.push(KappaRow {
            kappa,
            separable_rate: sep as f64 / config.trials as f64,
            mean_final_collapse: collapse_sum / config.trials as f64,
        });
    }
    Ok(rows)
}

pub fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,mse_p,train_ce,collapse_fraction")?;
    for pt in &traj.points {
        writeln!(w, "{},{},{},{}", pt.k, pt.mse_p, pt.train_ce, pt.collapse_fraction)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            let line = line?;
            if line.trim() != "k,mse_p,train_ce,collapse_fraction" {
                return Err(Error::parse(1, format!("unrecognized trajectory header {line:?}")));
            }
        }
        None => return Err(Error::parse(0, "no records")),
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 4 {
            return Err(Error::parse(lineno, "expected 4 fields"));
        }
        let f = |t: &str| -> Result<f64> {
            t.parse().map_err(|_| Error::parse(lineno, format!("bad number {t:?}")))
        };
        points.push(TrajectoryPoint {
            k: toks[0].parse().map_err(|_| Error::parse(lineno, "bad k"))?,
            mse_p: f(toks[1])?,
            train_ce: f(toks[2])?,
            collapse_fraction: f(toks[3])?,
        });
    }
    if points.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    Ok(Trajectory { points })
}

pub fn save_kappa_rows(rows: &[KappaRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "kappa,separable_rate,mean_final_collapse")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.kappa, r.separable_rate, r.mean_final_collapse)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_kappa_rows(path: impl AsRef<Path>) -> Result<Vec<KappaRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, line)) => {
            let line = line?;
            if line.trim() != "kappa,separable_rate,mean_final_collapse" {
                return Err(Error::parse(1, format!("unrecognized sweep header {line:?}")));
            }
        }
        None => return Err(Error::parse(0, "no records")),
    }
    let mut rows = Vec::new();
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
        let f = |t: &str| -> Result<f64> {
            t.parse().map_err(|_| Error::parse(lineno, format!("bad number {t:?}")))
        };
        rows.push(KappaRow {
            kappa: f(toks[0])?,
            separable_rate: f(toks[1])?,
            mean_final_collapse: f(toks[2])?,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_fraction_fixtures() {
        let f = collapse_fraction(&[0.999, 0.0005, 0.5], 1e-2).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(collapse_fraction(&[0.5; 10], 1e-2).unwrap(), 0.0);
        assert_eq!(collapse_fraction(&[0.0, 1.0, 1.0], 1e-2).unwrap(), 1.0);
        assert!(collapse_fraction(&[0.5], 0.5).is_err());
        assert!(collapse_fraction(&[0.5], 0.0).is_err());
    }

    fn dataset_1d(points: &[(f64, u8)]) -> LabeledDataset {
        let features: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
        let outcomes: Vec<u8> = points.iter().map(|&(_, y)| y).collect();
        LabeledDataset::new(features, 1, outcomes, None, None).unwrap()
    }

    #[test]
    fn separability_1d_fixtures() {
        // threshold at zero works
        let sep = dataset_1d(&[(-1.0, 0), (1.0, 1)]);
        assert!(separability_check(&sep).unwrap());
        // labels 1,0 on -1,+1 plus 0,1 on -2,+2: no homogeneous separator
        let non = dataset_1d(&[(-1.0, 1), (1.0, 0), (-2.0, 0), (2.0, 1)]);
        assert!(!separability_check(&non).unwrap());
    }

    #[test]
    fn all_same_label_is_trivially_separable() {
        let ds = dataset_1d(&[(-1.0, 1), (1.0, 1), (2.0, 1)]);
        assert!(separability_check(&ds).unwrap());
    }

    #[test]
    fn high_dimensional_gaussian_data_is_separable() {
        let spec = LogisticModelSpec::first_axis(500, 1.0).unwrap();
        for seed in 0..5 {
            let ds = generate_logistic_dataset(&spec, 100, seed).unwrap();
            assert!(separability_check(&ds).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn low_dimensional_data_is_not_separable() {
        let spec = LogisticModelSpec::first_axis(5, 1.0).unwrap();
        for seed in 0..5 {
            let ds = generate_logistic_dataset(&spec, 500, seed).unwrap();
            assert!(!separability_check(&ds).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn spectral_norm_matches_known_matrix() {
        // [[3, 0], [0, 4]] has spectral norm 4
        let x = vec![3.0, 0.0, 0.0, 4.0];
        let s = spectral_norm(&x, 2, 2, 0);
        assert!((s - 4.0).abs() < 1e-6, "norm {s}");
    }

    #[test]
    fn trajectory_rejects_unstable_step_size() {
        let config = TrajectoryConfig {
            n: 50,
            dim: 50,
            eta: 1e6,
            steps: 10,
            eval_every: 5,
            ..TrajectoryConfig::default()
        };
        assert!(run_trajectory(&config).is_err());
    }

    #[test]
    fn trajectory_records_expected_grid() {
        let config = TrajectoryConfig {
            n: 60,
            dim: 20,
            steps: 25,
            eval_every: 10,
            ..TrajectoryConfig::default()
        };
        let traj = run_trajectory(&config).unwrap();
        let ks: Vec<usize> = traj.points.iter().map(|pt| pt.k).collect();
        assert_eq!(ks, vec![0, 10, 20, 25]);
        for w in traj.points.windows(2) {
            assert!(w[0].k < w[1].k);
        }
        for pt in &traj.points {
            assert!(pt.mse_p.is_finite() && pt.mse_p >= 0.0);
            assert!(pt.train_ce.is_finite() && pt.train_ce >= 0.0);
            assert!((0.0..=1.0).contains(&pt.collapse_fraction));
        }
    }

    #[test]
    fn trajectory_is_deterministic() {
        let config = TrajectoryConfig {
            n: 40,
            dim: 10,
            steps: 20,
            eval_every: 5,
            ..TrajectoryConfig::default()
        };
        let a = run_trajectory(&config).unwrap();
        let b = run_trajectory(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn underparametrized_fit_matches_mle_and_stays_interior() {
        // 1-D logistic regression: gradient descent approaches the MLE,
        // and predictions stay far from 0/1
        let config = TrajectoryConfig {
            n: 100_000,
            dim: 1,
            gamma: 1.0,
            gamma0: 1.0,
            eta: 0.5,
            steps: 400,
            eval_every: 100,
            seed: 3,
            ..TrajectoryConfig::default()
        };
        let traj = run_trajectory(&config).unwrap();
        assert!(traj.final_point().collapse_fraction < 0.05);

        // independent oracle: Newton MLE on the same data
        let spec = LogisticModelSpec::first_axis(1, 1.0).unwrap();
        let ds = generate_logistic_dataset(&spec, config.n, rng::derive_seed(config.seed, "el-data", 0))
            .unwrap();
        let xs = ds.features_flat();
        let ys: Vec<f64> = ds.outcomes.iter().map(|&y| y as f64).collect();
        let mut theta = 0.0f64;
        for _ in 0..50 {
            let mut g = 0.0;
            let mut h = 0.0;
            for (&x, &y) in xs.iter().zip(&ys) {
                let p = sigmoid(theta * x);
                g += (p - y) * x;
                h += p * (1.0 - p) * x * x;
            }
            theta -= g / h;
        }
        assert!((theta - 1.0).abs() < 0.05, "MLE {theta}");
        let mle_preds: Vec<f64> = xs.iter().map(|&x| sigmoid(theta * x)).collect();
        assert!(collapse_fraction(&mle_preds, 1e-2).unwrap() < 0.05);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = Trajectory {
            points: vec![
                TrajectoryPoint {
                    k: 0,
                    mse_p: 0.125,
                    train_ce: 0.75,
                    collapse_fraction: 0.0,
                },
                TrajectoryPoint {
                    k: 10,
                    mse_p: 0.0625,
                    train_ce: 0.5,
                    collapse_fraction: 0.25,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        save_trajectory(&traj, &path).unwrap();
        assert_eq!(load_trajectory(&path).unwrap(), traj);
    }

    #[test]
    fn kappa_rows_csv_round_trip() {
        let rows = vec![
            KappaRow {
                kappa: 0.5,
                separable_rate: 0.0,
                mean_final_collapse: 0.125,
            },
            KappaRow {
                kappa: 5.0,
                separable_rate: 1.0,
                mean_final_collapse: 0.875,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        save_kappa_rows(&rows, &path).unwrap();
        assert_eq!(load_kappa_rows(&path).unwrap(), rows);
    }
}
