//! Internal k-fold search over the regularization constant.

use serde::Serialize;

use super::{fit, predict, ClassifierKind, HyperParams};
use crate::corpus::Star;
use crate::error::{Error, Result};
use crate::evaluate::{accuracy, kfold_split};
use crate::matrix::{RowMatrix, SubsetRows};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub c: f64,
    /// Mean validation accuracy, or `None` when a fold failed to fit.
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearch {
    pub best_c: f64,
    /// One cell per distinct grid value, ascending.
    pub cells: Vec<GridCell>,
}

/// Picks the C with the highest mean validation accuracy over `k` internal
/// folds of `x`; ties go to the smaller C.
pub fn grid_search_c<X>(
    kind: ClassifierKind,
    x: &X,
    labels: &[Star],
    grid: &[f64],
    k: usize,
    hp: &HyperParams,
) -> Result<GridSearch>
where
    X: RowMatrix + SubsetRows,
{
    if grid.is_empty() {
        return Err(Error::invalid("C grid is empty"));
    }
    let mut values = grid.to_vec();
    if values.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::invalid("C grid values must be positive"));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    let folds = kfold_split(x.n_rows(), k, hp.seed)?;

    let mut cells = Vec::with_capacity(values.len());
    for &c in &values {
        let cell_hp = HyperParams { c, ..*hp };
        let mut total = 0.0;
        let mut failure = None;
        for fold in &folds {
            let train_y: Vec<Star> = fold.train.iter().map(|&i| labels[i]).collect();
            let val_y: Vec<Star> = fold.validation.iter().map(|&i| labels[i]).collect();
            let outcome = fit(kind, &x.subset(&fold.train), &train_y, &cell_hp)
                .and_then(|m| predict(&m, &x.subset(&fold.validation)))
                .and_then(|p| accuracy(&p, &val_y));
            match outcome {
                Ok(a) => total += a,
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        cells.push(match failure {
            None => GridCell { c, accuracy: Some(total / folds.len() as f64), error: None },
            Some(e) => GridCell { c, accuracy: None, error: Some(e) },
        });
    }

    let mut best: Option<(f64, f64)> = None;
    for cell in &cells {
        if let Some(a) = cell.accuracy {
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((cell.c, a));
            }
        }
    }
    match best {
        Some((best_c, _)) => Ok(GridSearch { best_c, cells }),
        None => Err(Error::invalid(format!(
            "every C in the grid failed to fit: {}",
            cells.iter().filter_map(|c| c.error.as_deref()).next().unwrap_or("")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn star(v: u8) -> Star {
        Star::new(v).unwrap()
    }

    #[test]
    fn single_value_grid() {
        let x = DenseMatrix::new(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
        let y = [star(1), star(1), star(1), star(5), star(5), star(5)];
        let g = grid_search_c(ClassifierKind::LinearSvc, &x, &y, &[0.5], 3, &HyperParams::default()).unwrap();
        assert_eq!(g.best_c, 0.5);
        assert_eq!(g.cells.len(), 1);
    }

    #[test]
    fn all_failing_cells_is_an_error() {
        let x = DenseMatrix::new(6, 1, vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
        let y = [star(1), star(2), star(1), star(2), star(1), star(2)];
        let hp = HyperParams { max_iter: 1, tol: 1e-12, ..Default::default() };
        assert!(grid_search_c(ClassifierKind::LinearSvc, &x, &y, &[10.0, 100.0], 3, &hp).is_err());
        assert!(grid_search_c(ClassifierKind::LinearSvc, &x, &y, &[], 3, &hp).is_err());
    }
}
