//! L2-regularized logistic regression, multinomial (softmax) or one-vs-rest.
//!
//! Parameters are laid out as `[W (classes × features, row-major), b]`.
//! The bias is not regularized. The solver minimizes the objective divided
//! by the row count, which has the same minimizer and keeps the gradient
//! tolerance independent of corpus size.

use rayon::prelude::*;

use super::lbfgs;
use super::{check_rows, row_chunks, ClassifierKind, Diagnostics, HyperParams, Labels, LogRegMode, TrainedModel};
use crate::corpus::Star;
use crate::error::Result;
use crate::matrix::RowMatrix;

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Sums per-chunk partial (value, gradient) pairs in chunk order.
fn reduce_chunks<X, F>(x: &X, len: usize, per_row: F) -> (f64, Vec<f64>)
where
    X: RowMatrix,
    F: Fn(usize, &mut [f64]) -> f64 + Sync,
{
    let partials: Vec<(f64, Vec<f64>)> = row_chunks(x.n_rows())
        .into_par_iter()
        .map(|rows| {
            let mut grad = vec![0.0; len];
            let mut value = 0.0;
            for r in rows {
                value += per_row(r, &mut grad);
            }
            (value, grad)
        })
        .collect();
    let mut value = 0.0;
    let mut grad = vec![0.0; len];
    for (v, g) in partials {
        value += v;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (value, grad)
}

/// `½‖W‖²/C + Σᵢ −log softmax(W xᵢ + b)[yᵢ]` and its gradient.
///
/// `labels[i]` indexes the class of row `i` in `0..n_classes`.
pub fn softmax_loss_and_gradient<X: RowMatrix>(
    x: &X,
    labels: &[usize],
    n_classes: usize,
    theta: &[f64],
    c: f64,
) -> (f64, Vec<f64>) {
    let f = x.n_cols();
    let (weights, bias) = theta.split_at(n_classes * f);
    let (nll, mut grad) = reduce_chunks(x, theta.len(), |r, grad| {
        let z: Vec<f64> = (0..n_classes).map(|k| x.row_dot(r, &weights[k * f..(k + 1) * f]) + bias[k]).collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let y = labels[r];
        for k in 0..n_classes {
            let p = (z[k] - lse).exp();
            let d = p - if k == y { 1.0 } else { 0.0 };
            x.row_axpy(r, d, &mut grad[k * f..(k + 1) * f]);
            grad[n_classes * f + k] += d;
        }
        lse - z[y]
    });
    let mut reg = 0.0;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += w / c;
        reg += w * w;
    }
    (nll + 0.5 * reg / c, grad)
}

/// Binary version for one-vs-rest: `½‖w‖²/C + Σᵢ log(1 + exp(−zᵢ (w·xᵢ + b)))`
/// with `theta = [w, b]` and `signs[i] = ±1`.
pub fn binary_loss_and_gradient<X: RowMatrix>(x: &X, signs: &[f64], theta: &[f64], c: f64) -> (f64, Vec<f64>) {
    let f = x.n_cols();
    let (w, b) = (&theta[..f], theta[f]);
    let (nll, mut grad) = reduce_chunks(x, theta.len(), |r, grad| {
        let z = signs[r];
        let margin = z * (x.row_dot(r, w) + b);
        let d = -z * sigmoid(-margin);
        x.row_axpy(r, d, &mut grad[..f]);
        grad[f] += d;
        softplus(-margin)
    });
    let mut reg = 0.0;
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += wi / c;
        reg += wi * wi;
    }
    (nll + 0.5 * reg / c, grad)
}

pub fn fit_logreg<X: RowMatrix>(x: &X, labels: &[Star], hp: &HyperParams) -> Result<TrainedModel> {
    hp.validate()?;
    check_rows(x, labels)?;
    let lab = Labels::new(labels)?;
    let k = lab.n_classes();
    let f = x.n_cols();
    let n = x.n_rows() as f64;

    let (weights, bias, iterations, objective) = match hp.logreg_mode {
        LogRegMode::Multinomial => {
            let eval = |theta: &[f64]| {
                let (v, mut g) = softmax_loss_and_gradient(x, &lab.index, k, theta, hp.c);
                g.iter_mut().for_each(|gi| *gi /= n);
                (v / n, g)
            };
            let min = lbfgs::minimize(eval, vec![0.0; k * f + k], hp.tol, hp.max_iter)?;
            let bias = min.x[k * f..].to_vec();
            let mut weights = min.x;
            weights.truncate(k * f);
            (weights, bias, min.iterations, min.value * n)
        }
        LogRegMode::OneVsRest => {
            let fits: Vec<Result<(Vec<f64>, usize, f64)>> = (0..k)
                .into_par_iter()
                .map(|class| {
                    let signs: Vec<f64> = lab.index.iter().map(|&y| if y == class { 1.0 } else { -1.0 }).collect();
                    let eval = |theta: &[f64]| {
                        let (v, mut g) = binary_loss_and_gradient(x, &signs, theta, hp.c);
                        g.iter_mut().for_each(|gi| *gi /= n);
                        (v / n, g)
                    };
                    let min = lbfgs::minimize(eval, vec![0.0; f + 1], hp.tol, hp.max_iter)?;
                    Ok((min.x, min.iterations, min.value * n))
                })
                .collect();
            let mut weights = Vec::with_capacity(k * f);
            let mut bias = Vec::with_capacity(k);
            let mut iterations = 0;
            let mut objective = 0.0;
            for fit in fits {
                let (theta, it, obj) = fit?;
                weights.extend_from_slice(&theta[..f]);
                bias.push(theta[f]);
                iterations = iterations.max(it);
                objective += obj;
            }
            (weights, bias, iterations, objective)
        }
    };

    Ok(TrainedModel::new(
        ClassifierKind::LogReg,
        lab.classes,
        f,
        *hp,
        weights,
        bias,
        Diagnostics { iterations, objective: Some(objective), converged: true, last_epoch_updates: None },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::predict;
    use crate::matrix::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn star(v: u8) -> Star {
        Star::new(v).unwrap()
    }

    #[test]
    fn separable_one_dimensional_classes() {
        let x = DenseMatrix::new(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
        let y = [star(1), star(1), star(1), star(5), star(5), star(5)];
        let hp = HyperParams { c: 1e4, ..Default::default() };
        let m = fit_logreg(&x, &y, &hp).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), y);
        assert!(m.diagnostics().converged);
    }

    #[test]
    fn single_class_rejected() {
        let x = DenseMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert!(fit_logreg(&x, &[star(2), star(2)], &HyperParams::default()).is_err());
    }

    #[test]
    fn binary_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DenseMatrix::new(5, 3, (0..15).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let signs = [1.0, -1.0, 1.0, 1.0, -1.0];
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, g) = binary_loss_and_gradient(&x, &signs, &theta, 0.7);
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            up[i] += h;
            let mut down = theta.clone();
            down[i] -= h;
            let fd = (binary_loss_and_gradient(&x, &signs, &up, 0.7).0
                - binary_loss_and_gradient(&x, &signs, &down, 0.7).0)
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7, "coordinate {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn one_vs_rest_mode_fits() {
        let x = DenseMatrix::new(6, 2, vec![0.0, 1.0, 0.1, 0.9, 1.0, 0.0, 0.9, 0.1, 1.0, 1.0, 0.9, 0.9]).unwrap();
        let y = [star(1), star(1), star(3), star(3), star(5), star(5)];
        let hp = HyperParams { c: 100.0, logreg_mode: LogRegMode::OneVsRest, ..Default::default() };
        let m = fit_logreg(&x, &y, &hp).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), y);
    }

    #[test]
    fn tiny_iteration_budget_reports_non_convergence() {
        let x = DenseMatrix::new(4, 1, vec![-2.0, -1.0, 1.0, 2.0]).unwrap();
        let y = [star(1), star(2), star(1), star(2)];
        let hp = HyperParams { max_iter: 1, tol: 1e-12, ..Default::default() };
        assert!(fit_logreg(&x, &y, &hp).unwrap_err().is_internal());
    }
}
