//! Multinomial naive Bayes with additive smoothing.

use super::{check_rows, ClassifierKind, Diagnostics, HyperParams, Labels, TrainedModel};
use crate::corpus::Star;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

pub fn fit_nb<X: RowMatrix>(x: &X, labels: &[Star], hp: &HyperParams) -> Result<TrainedModel> {
    hp.validate()?;
    check_rows(x, labels)?;
    let min = x.min_value();
    if min < 0.0 {
        return Err(Error::invalid(format!("naive Bayes needs non-negative features, found {min}")));
    }
    let lab = Labels::new(labels)?;
    let k = lab.n_classes();
    let f = x.n_cols();

    let mut mass = vec![0.0; k * f];
    let mut counts = vec![0usize; k];
    for (r, &y) in lab.index.iter().enumerate() {
        counts[y] += 1;
        x.row_axpy(r, 1.0, &mut mass[y * f..(y + 1) * f]);
    }

    let n = labels.len() as f64;
    let alpha = hp.alpha;
    let mut weights = Vec::with_capacity(k * f);
    for class in 0..k {
        let row = &mass[class * f..(class + 1) * f];
        let total: f64 = row.iter().sum::<f64>() + alpha * f as f64;
        if !(total > 0.0) {
            return Err(Error::invalid(format!("class {} has no feature mass and alpha is 0", lab.classes[class])));
        }
        let log_total = total.ln();
        weights.extend(row.iter().map(|&m| (alpha + m).ln() - log_total));
    }
    let bias = counts.iter().map(|&c| (c as f64 / n).ln()).collect();

    Ok(TrainedModel::new(
        ClassifierKind::NaiveBayes,
        lab.classes,
        f,
        *hp,
        weights,
        bias,
        Diagnostics { iterations: 0, objective: None, converged: true, last_epoch_updates: None },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::predict;
    use crate::matrix::{DenseMatrix, SparseMatrix, Weighting};

    fn star(v: u8) -> Star {
        Star::new(v).unwrap()
    }

    #[test]
    fn laplace_smoothed_likelihoods() {
        let x = SparseMatrix::from_dense(2, &[2.0, 0.0, 0.0, 2.0], Weighting::Counts).unwrap();
        let m = fit_nb(&x, &[star(1), star(2)], &HyperParams::default()).unwrap();
        let w = m.weights(0);
        assert!((w[0].exp() - 0.75).abs() < 1e-12);
        assert!((w[1].exp() - 0.25).abs() < 1e-12);
        assert!((m.bias()[0].exp() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn likelihoods_sum_to_one_per_class() {
        let x = DenseMatrix::new(3, 3, vec![1.0, 0.0, 4.0, 0.5, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let m = fit_nb(&x, &[star(1), star(3), star(3)], &HyperParams { alpha: 0.3, ..Default::default() }).unwrap();
        for k in 0..2 {
            let s: f64 = m.weights(k).iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_row_predicts_the_prior_mode() {
        let x = DenseMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 2.0]).unwrap();
        let m = fit_nb(&x, &[star(4), star(2), star(2)], &HyperParams::default()).unwrap();
        let zero = DenseMatrix::zeros(1, 2);
        assert_eq!(predict(&m, &zero).unwrap(), vec![star(2)]);
    }

    #[test]
    fn negative_features_rejected() {
        let x = DenseMatrix::new(2, 1, vec![-0.1, 1.0]).unwrap();
        assert!(fit_nb(&x, &[star(1), star(2)], &HyperParams::default()).is_err());
    }
}
