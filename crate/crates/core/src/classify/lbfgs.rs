//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `eval` (returning value and gradient) until `‖∇‖∞ ≤ tol`.
pub(crate) fn minimize<F>(eval: F, x0: Vec<f64>, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut f, mut g) = eval(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);

    for iteration in 0..=max_iter {
        if inf_norm(&g) <= tol {
            return Ok(Minimum { x, value: f, iterations: iteration });
        }
        if iteration == max_iter {
            break;
        }

        let mut attempt = 0;
        let (x_new, f_new, g_new) = loop {
            let d = if history.is_empty() {
                let scale = 1.0 / inf_norm(&g).max(1.0);
                g.iter().map(|v| -v * scale).collect()
            } else {
                direction(&g, &history)
            };
            let slope = dot(&g, &d);
            if slope < 0.0 {
                if let Some(step) = backtrack(&eval, &x, f, &d, slope) {
                    break step;
                }
            }
            attempt += 1;
            if history.is_empty() || attempt > 1 {
                return Err(Error::NonConvergence {
                    solver: "l-bfgs",
                    iterations: iteration,
                    detail: format!("line search failed; gradient inf-norm {:.3e}", inf_norm(&g)),
                });
            }
            history.clear();
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    Err(Error::NonConvergence {
        solver: "l-bfgs",
        iterations: max_iter,
        detail: format!("objective {f:.6e}, gradient inf-norm {:.3e}", inf_norm(&g)),
    })
}

/// Two-loop recursion for `-H g`.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s, y, _) = history.back().expect("non-empty history");
    let gamma = dot(s, y) / dot(y, y);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn backtrack<F>(eval: &F, x: &[f64], f: f64, d: &[f64], slope: f64) -> Option<(Vec<f64>, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut step = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + step * di).collect();
        let (ft, gt) = eval(&trial);
        if ft.is_finite() && ft <= f + ARMIJO * step * slope {
            return Some((trial, ft, gt));
        }
        step *= 0.5;
    }
    None
}
