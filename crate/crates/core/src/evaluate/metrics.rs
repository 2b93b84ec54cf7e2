use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::Star;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub rmse: f64,
    pub accuracy: f64,
    pub n: usize,
}

impl Metrics {
    pub fn score(pred: &[Star], truth: &[Star]) -> Result<Self> {
        Ok(Metrics { rmse: rmse(pred, truth)?, accuracy: accuracy(pred, truth)?, n: pred.len() })
    }
}

fn check(pred: &[Star], truth: &[Star]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction set"));
    }
    Ok(())
}

pub fn rmse(pred: &[Star], truth: &[Star]) -> Result<f64> {
    check(pred, truth)?;
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p.value() as f64 - t.value() as f64).powi(2)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

pub fn accuracy(pred: &[Star], truth: &[Star]) -> Result<f64> {
    check(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// One cross-validation fold: indices are ascending on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffles `0..n` with a seeded ChaCha8 stream and cuts it into `k`
/// contiguous parts; the first `n % k` parts get one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("cannot split {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0usize; n];
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        for &i in &order[start..start + len] {
            assignment[i] = fold;
        }
        start += len;
    }
    Ok((0..k)
        .map(|fold| {
            let (validation, train) = (0..n).partition(|&i| assignment[i] == fold);
            Fold { train, validation }
        })
        .collect())
}
