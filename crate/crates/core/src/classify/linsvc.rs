//! One-vs-rest linear SVC with L1 (hinge) loss, solved in the dual by
//! coordinate descent.
//!
//! The bias is handled as an extra constant feature of value 1, so the
//! per-class objective is `½(‖w‖² + b²) + C Σᵢ max(0, 1 − zᵢ(w·xᵢ + b))`.
//! A class stops once the relative duality gap `(P − D) / P` at the end of
//! a pass is at most `tol`, which bounds the primal suboptimality.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_rows, ClassifierKind, Diagnostics, HyperParams, Labels, TrainedModel};
use crate::corpus::Star;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

struct BinaryFit {
    w: Vec<f64>,
    b: f64,
    epochs: usize,
    objective: f64,
}

/// Primal objective of one binary problem, bias included in the norm.
pub fn hinge_objective<X: RowMatrix>(x: &X, signs: &[f64], w: &[f64], b: f64, c: f64) -> f64 {
    let norm: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
    let loss: f64 = (0..x.n_rows()).map(|r| (1.0 - signs[r] * (x.row_dot(r, w) + b)).max(0.0)).sum();
    0.5 * norm + c * loss
}

fn fit_binary<X: RowMatrix>(x: &X, signs: &[f64], hp: &HyperParams, stream: u64) -> Result<BinaryFit> {
    let n = x.n_rows();
    let f = x.n_cols();
    let c = hp.c;
    let diag: Vec<f64> = (0..n).map(|r| x.row_sq_norm(r) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; f];
    let mut b = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=hp.max_iter {
        order.shuffle(&mut rng);
        for &i in &order {
            let z = signs[i];
            let g = z * (x.row_dot(i, &w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * z;
                if step != 0.0 {
                    x.row_axpy(i, step, &mut w);
                    b += step;
                }
            }
        }
        let primal = hinge_objective(x, signs, &w, b, c);
        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        let dual = alpha.iter().sum::<f64>() - 0.5 * norm;
        if primal - dual <= hp.tol * primal.abs() {
            return Ok(BinaryFit { w, b, epochs: epoch, objective: primal });
        }
    }
    Err(Error::NonConvergence {
        solver: "linsvc dual coordinate descent",
        iterations: hp.max_iter,
        detail: format!("objective {:.6e}", hinge_objective(x, signs, &w, b, c)),
    })
}

pub fn fit_linsvc<X: RowMatrix>(x: &X, labels: &[Star], hp: &HyperParams) -> Result<TrainedModel> {
    hp.validate()?;
    check_rows(x, labels)?;
    let lab = Labels::new(labels)?;
    let k = lab.n_classes();
    let f = x.n_cols();

    let fits: Vec<Result<BinaryFit>> = (0..k)
        .into_par_iter()
        .map(|class| {
            let signs: Vec<f64> = lab.index.iter().map(|&y| if y == class { 1.0 } else { -1.0 }).collect();
            fit_binary(x, &signs, hp, class as u64)
        })
        .collect();

    let mut weights = Vec::with_capacity(k * f);
    let mut bias = Vec::with_capacity(k);
    let mut epochs = 0;
    let mut objective = 0.0;
    for fit in fits {
        let fit = fit?;
        weights.extend_from_slice(&fit.w);
        bias.push(fit.b);
        epochs = epochs.max(fit.epochs);
        objective += fit.objective;
    }

    Ok(TrainedModel::new(
        ClassifierKind::LinearSvc,
        lab.classes,
        f,
        *hp,
        weights,
        bias,
        Diagnostics { iterations: epochs, objective: Some(objective), converged: true, last_epoch_updates: None },
    ))
}
