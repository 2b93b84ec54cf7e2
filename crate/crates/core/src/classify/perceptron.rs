//! Plain multi-class perceptron (no averaging).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, check_rows, ClassifierKind, Diagnostics, HyperParams, Labels, TrainedModel};
use crate::corpus::Star;
use crate::error::Result;
use crate::matrix::RowMatrix;

pub fn fit_perceptron<X: RowMatrix>(x: &X, labels: &[Star], hp: &HyperParams) -> Result<TrainedModel> {
    hp.validate()?;
    check_rows(x, labels)?;
    let lab = Labels::new(labels)?;
    let k = lab.n_classes();
    let f = x.n_cols();
    let mut weights = vec![0.0; k * f];
    let mut bias = vec![0.0; k];
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut order: Vec<usize> = (0..x.n_rows()).collect();

    let mut epochs = 0;
    let mut updates = 0;
    let mut scores = vec![0.0; k];
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        epochs += 1;
        updates = 0;
        for &r in &order {
            for (c, s) in scores.iter_mut().enumerate() {
                *s = x.row_dot(r, &weights[c * f..(c + 1) * f]) + bias[c];
            }
            let guess = argmax(&scores);
            let truth = lab.index[r];
            if guess != truth {
                x.row_axpy(r, 1.0, &mut weights[truth * f..(truth + 1) * f]);
                x.row_axpy(r, -1.0, &mut weights[guess * f..(guess + 1) * f]);
                bias[truth] += 1.0;
                bias[guess] -= 1.0;
                updates += 1;
            }
        }
        if updates == 0 {
            break;
        }
    }

    Ok(TrainedModel::new(
        ClassifierKind::Perceptron,
        lab.classes,
        f,
        *hp,
        weights,
        bias,
        Diagnostics { iterations: epochs, objective: None, converged: updates == 0, last_epoch_updates: Some(updates) },
    ))
}
