//! Dataset containers, deterministic splitting, and CSV persistence.
//!
//! Two text schemas are supported, both with a header row:
//! predictions as `prob,outcome[,truth_prob]` and datasets as
//! `f0,...,f{d-1},outcome[,truth_prob][,latent]`. Values are written
//! with Rust's shortest round-trip formatting, so `load(save(x)) == x`
//! exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Feature matrix with binary outcomes and, for synthetic data, the
/// generating probabilities and scalar latents.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    dim: usize,
    pub outcomes: Vec<u8>,
    pub truth_probs: Option<Vec<f64>>,
    pub latent: Option<Vec<f64>>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        outcomes: Vec<u8>,
        truth_probs: Option<Vec<f64>>,
        latent: Option<Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid_argument("feature dimension must be >= 1"));
        }
        if outcomes.is_empty() {
            return Err(Error::invalid_argument("dataset must contain at least one example"));
        }
        if features.len() != outcomes.len() * dim {
            return Err(Error::invalid_argument(format!(
                "feature matrix has {} entries, expected {} ({} rows x {} columns)",
                features.len(),
                outcomes.len() * dim,
                outcomes.len(),
                dim
            )));
        }
        if let Some(bad) = outcomes.iter().find(|&&y| y > 1) {
            return Err(Error::invalid_argument(format!("outcome {bad} is not 0 or 1")));
        }
        if let Some(tp) = &truth_probs {
            if tp.len() != outcomes.len() {
                return Err(Error::invalid_argument("truth_probs length mismatch"));
            }
            if tp.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid_argument("truth_probs outside [0,1]"));
            }
        }
        if let Some(z) = &latent {
            if z.len() != outcomes.len() {
                return Err(Error::invalid_argument("latent length mismatch"));
            }
        }
        Ok(Self {
            features,
            dim,
            outcomes,
            truth_probs,
            latent,
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    /// Gather the rows named by `idx` into a fresh flat matrix.
    pub fn gather_features(&self, idx: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            out.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn gather_outcomes(&self, idx: &[usize]) -> Vec<u8> {
        idx.iter().map(|&i| self.outcomes[i]).collect()
    }

    pub fn gather_truth(&self, idx: &[usize]) -> Option<Vec<f64>> {
        self.truth_probs
            .as_ref()
            .map(|tp| idx.iter().map(|&i| tp[i]).collect())
    }
}

/// Estimated probabilities aligned with observed outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub probs: Vec<f64>,
    pub outcomes: Vec<u8>,
    pub truth_probs: Option<Vec<f64>>,
}

impl PredictionSet {
    pub fn new(probs: Vec<f64>, outcomes: Vec<u8>, truth_probs: Option<Vec<f64>>) -> Result<Self> {
        if probs.len() != outcomes.len() {
            return Err(Error::invalid_argument("probs and outcomes length mismatch"));
        }
        if probs.is_empty() {
            return Err(Error::invalid_argument("prediction set must be nonempty"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid_argument("probability outside [0,1]"));
        }
        if outcomes.iter().any(|&y| y > 1) {
            return Err(Error::invalid_argument("outcome not in {0,1}"));
        }
        if let Some(tp) = &truth_probs {
            if tp.len() != probs.len() {
                return Err(Error::invalid_argument("truth_probs length mismatch"));
            }
        }
        Ok(Self {
            probs,
            outcomes,
            truth_probs,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Disjoint train/validation/test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Deterministically partition `0..n` into train/val/test.
///
/// Sizes are floor-based on the val and test fractions with the
/// remainder assigned to train; the permutation is drawn from the
/// `(seed, "split")` stream. Index sets are returned sorted.
pub fn split(dataset: &LabeledDataset, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let n = dataset.len();
    let (ft, fv, fs) = fractions;
    for f in [ft, fv, fs] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid_argument(format!("fraction {f} outside [0,1]")));
        }
    }
    if (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::invalid_argument("fractions must sum to 1"));
    }
    if ft > 0.0 && fv > 0.0 && fs > 0.0 && n < 3 {
        return Err(Error::invalid_argument("need at least 3 examples for a 3-way split"));
    }

    let n_val = (fv * n as f64).floor() as usize;
    let n_test = (fs * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    for (frac, size, name) in [(ft, n_train, "train"), (fv, n_val, "val"), (fs, n_test, "test")] {
        if frac > 0.0 && size == 0 {
            return Err(Error::invalid_argument(format!(
                "{name} fraction {frac} floors to zero examples at n={n}"
            )));
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, "split"));

    let mut train_idx: Vec<usize> = perm[..n_train].to_vec();
    let mut val_idx: Vec<usize> = perm[n_train..n_train + n_val].to_vec();
    let mut test_idx: Vec<usize> = perm[n_train + n_val..].to_vec();
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(Split {
        train_idx,
        val_idx,
        test_idx,
    })
}

fn parse_field(tok: &str, line: usize, what: &str) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} from {tok:?}")))
}

fn parse_outcome(tok: &str, line: usize) -> Result<u8> {
    match tok.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(line, format!("outcome {other:?} is not 0 or 1"))),
    }
}

fn parse_prob(tok: &str, line: usize, what: &str) -> Result<f64> {
    let p = parse_field(tok, line, what)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::parse(line, format!("{what} {p} outside [0,1]")));
    }
    Ok(p)
}

/// Write a prediction set as `prob,outcome[,truth_prob]`.
pub fn save_predictions(pred: &PredictionSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if pred.truth_probs.is_some() {
        writeln!(w, "prob,outcome,truth_prob")?;
    } else {
        writeln!(w, "prob,outcome")?;
    }
    for i in 0..pred.len() {
        match &pred.truth_probs {
            Some(tp) => writeln!(w, "{},{},{}", pred.probs[i], pred.outcomes[i], tp[i])?,
            None => writeln!(w, "{},{}", pred.probs[i], pred.outcomes[i])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(0, "no records")),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    let has_truth = match cols.as_slice() {
        ["prob", "outcome"] => false,
        ["prob", "outcome", "truth_prob"] => true,
        _ => return Err(Error::parse(1, format!("unrecognized prediction header {header:?}"))),
    };

    let mut probs = Vec::new();
    let mut outcomes = Vec::new();
    let mut truth = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        let expected = if has_truth { 3 } else { 2 };
        if toks.len() != expected {
            return Err(Error::parse(lineno, format!("expected {expected} fields, got {}", toks.len())));
        }
        probs.push(parse_prob(toks[0], lineno, "prob")?);
        outcomes.push(parse_outcome(toks[1], lineno)?);
        if has_truth {
            truth.push(parse_prob(toks[2], lineno, "truth_prob")?);
        }
    }
    if probs.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    PredictionSet::new(probs, outcomes, has_truth.then_some(truth))
}

/// Write a dataset as `f0,...,f{d-1},outcome[,truth_prob][,latent]`.
pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("f{j}")).collect();
    header.push("outcome".into());
    if ds.truth_probs.is_some() {
        header.push("truth_prob".into());
    }
    if ds.latent.is_some() {
        header.push("latent".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut row: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        row.push(ds.outcomes[i].to_string());
        if let Some(tp) = &ds.truth_probs {
            row.push(tp[i].to_string());
        }
        if let Some(z) = &ds.latent {
            row.push(z[i].to_string());
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(0, "no records")),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    let dim = cols.iter().take_while(|c| c.starts_with('f')).count();
    if dim == 0 {
        return Err(Error::parse(1, "header must begin with feature columns f0,f1,..."));
    }
    for (j, c) in cols[..dim].iter().enumerate() {
        if **c != format!("f{j}") {
            return Err(Error::parse(1, format!("feature column {j} is named {c:?}, expected f{j}")));
        }
    }
    let rest = &cols[dim..];
    let (has_truth, has_latent) = match rest {
        ["outcome"] => (false, false),
        ["outcome", "truth_prob"] => (true, false),
        ["outcome", "latent"] => (false, true),
        ["outcome", "truth_prob", "latent"] => (true, true),
        _ => return Err(Error::parse(1, format!("unrecognized dataset header {header:?}"))),
    };

    let expected = dim + 1 + has_truth as usize + has_latent as usize;
    let mut features = Vec::new();
    let mut outcomes = Vec::new();
    let mut truth = Vec::new();
    let mut latent = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != expected {
            return Err(Error::parse(lineno, format!("expected {expected} fields, got {}", toks.len())));
        }
        for (j, tok) in toks[..dim].iter().enumerate() {
            features.push(parse_field(tok, lineno, &format!("f{j}"))?);
        }
        outcomes.push(parse_outcome(toks[dim], lineno)?);
        let mut k = dim + 1;
        if has_truth {
            truth.push(parse_prob(toks[k], lineno, "truth_prob")?);
            k += 1;
        }
        if has_latent {
            latent.push(parse_field(toks[k], lineno, "latent")?);
        }
    }
    if outcomes.is_empty() {
        return Err(Error::parse(0, "no records"));
    }
    LabeledDataset::new(
        features,
        dim,
        outcomes,
        has_truth.then_some(truth),
        has_latent.then_some(latent),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize) -> LabeledDataset {
        let features: Vec<f64> = (0..n * 2).map(|i| i as f64 * 0.1).collect();
        let outcomes: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        LabeledDataset::new(features, 2, outcomes, None, None).unwrap()
    }

    #[test]
    fn split_sizes_are_floor_based_with_remainder_to_train() {
        let ds = toy_dataset(100);
        let s = split(&ds, (0.7, 0.15, 0.15), 1).unwrap();
        assert_eq!(s.train_idx.len(), 70);
        assert_eq!(s.val_idx.len(), 15);
        assert_eq!(s.test_idx.len(), 15);
    }

    #[test]
    fn split_is_a_partition() {
        let ds = toy_dataset(97);
        let s = split(&ds, (0.5, 0.25, 0.25), 3).unwrap();
        let mut all: Vec<usize> = s
            .train_idx
            .iter()
            .chain(&s.val_idx)
            .chain(&s.test_idx)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..97).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_split_puts_everything_in_train() {
        let ds = toy_dataset(10);
        let s = split(&ds, (1.0, 0.0, 0.0), 42).unwrap();
        assert_eq!(s.train_idx, (0..10).collect::<Vec<_>>());
        assert!(s.val_idx.is_empty());
        assert!(s.test_idx.is_empty());
    }

    #[test]
    fn split_is_deterministic_under_seed() {
        let ds = toy_dataset(5);
        let a = split(&ds, (0.6, 0.2, 0.2), 7).unwrap();
        let b = split(&ds, (0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(a, b);
        let c = split(&ds, (0.6, 0.2, 0.2), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = toy_dataset(10);
        assert!(split(&ds, (0.5, 0.2, 0.2), 0).is_err());
        assert!(split(&ds, (1.2, -0.1, -0.1), 0).is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        let pred = PredictionSet::new(vec![0.2, 0.8], vec![0, 1], None).unwrap();
        save_predictions(&pred, &path).unwrap();
        let loaded = load_predictions(&path).unwrap();
        assert_eq!(pred, loaded);
    }

    #[test]
    fn predictions_round_trip_with_truth() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        let pred = PredictionSet::new(
            vec![0.25, 0.125, 1.0 / 3.0],
            vec![0, 1, 1],
            Some(vec![0.3, 0.1, 0.9]),
        )
        .unwrap();
        save_predictions(&pred, &path).unwrap();
        assert_eq!(load_predictions(&path).unwrap(), pred);
    }

    #[test]
    fn prob_out_of_range_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "prob,outcome\n0.5,1\n1.5,0\n").unwrap();
        match load_predictions(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_reports_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        let err = load_predictions(&path).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
        std::fs::write(&path, "prob,outcome\n").unwrap();
        let err = load_predictions(&path).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn dataset_round_trip_with_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = LabeledDataset::new(
            vec![0.1, -1.0, 2.5, 0.3, 7.0, -0.25],
            3,
            vec![1, 0],
            Some(vec![0.75, 0.5]),
            Some(vec![42.0, 17.0]),
        )
        .unwrap();
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
    }

    #[test]
    fn dataset_rejects_bad_outcome_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        std::fs::write(&path, "f0,outcome\n0.5,1\n0.1,2\n").unwrap();
        match load_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
