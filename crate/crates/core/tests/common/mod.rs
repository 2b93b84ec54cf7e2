//! Brute-force oracles and fixtures shared by the integration tests. None
//! of these call into the library's numerical code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rating_forge::corpus::Star;
use rating_forge::matrix::DenseMatrix;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_rating-forge"))
}

pub fn star(v: u8) -> Star {
    Star::new(v).unwrap()
}

/// Singular values of a row-major `m × n` matrix by one-sided (Hestenes)
/// Jacobi: rotate column pairs until all are mutually orthogonal, then read
/// off the column norms. Sorted non-increasing.
pub fn jacobi_singular_values(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    if n > m {
        // same singular values; keeps every column numerically non-null
        let t: Vec<f64> = (0..n * m).map(|k| a[(k % m) * n + k / m]).collect();
        return jacobi_singular_values(&t, n, m);
    }
    // work on columns
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i * n + j]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .fold((0.0, 0.0, 0.0), |(a, b, g), (x, y)| (a + x * x, b + y * y, g + x * y));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma
}

/// Dense TF-IDF of token documents with n-grams of order `1..=n_max`:
/// raw counts times `ln((1 + N) / (1 + df)) + 1`, each row scaled to unit
/// Euclidean length. Returns the n-grams (space-joined, sorted) and the
/// `docs × ngrams` matrix.
pub fn dense_tfidf(docs: &[Vec<String>], n_max: usize) -> (Vec<String>, Vec<Vec<f64>>) {
    let grams = |doc: &Vec<String>| -> Vec<String> {
        let mut out = Vec::new();
        for n in 1..=n_max {
            for w in doc.windows(n) {
                out.push(w.join(" "));
            }
        }
        out
    };
    let per_doc: Vec<Vec<String>> = docs.iter().map(grams).collect();
    let vocab: Vec<String> = per_doc.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let n_docs = docs.len() as f64;
    let mut tf = vec![vec![0.0; vocab.len()]; docs.len()];
    for (d, gs) in per_doc.iter().enumerate() {
        for g in gs {
            tf[d][index[g.as_str()]] += 1.0;
        }
    }
    let mut df = vec![0.0; vocab.len()];
    for row in &tf {
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                df[j] += 1.0;
            }
        }
    }
    for row in &mut tf {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= ((1.0 + n_docs) / (1.0 + df[j])).ln() + 1.0;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    (vocab, tf)
}

/// A count-matrix fixture: `stars,f0,f1,...` header then one document per line.
pub struct CountFixture {
    pub labels: Vec<Star>,
    pub counts: Vec<Vec<f64>>,
}

impl CountFixture {
    pub fn load(name: &str) -> CountFixture {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let mut labels = Vec::new();
        let mut counts = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let mut fields = line.split(',');
            labels.push(star(fields.next().unwrap().parse().unwrap()));
            counts.push(fields.map(|f| f.parse().unwrap()).collect());
        }
        CountFixture { labels, counts }
    }

    pub fn n_features(&self) -> usize {
        self.counts[0].len()
    }

    pub fn dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.counts.len(), self.n_features(), self.counts.concat()).unwrap()
    }
}

/// Multinomial naive Bayes by direct application of Bayes' rule.
pub struct BayesOracle {
    pub classes: Vec<Star>,
    pub log_prior: Vec<f64>,
    /// `log_likelihood[k][f]`
    pub log_likelihood: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

impl BayesOracle {
    pub fn fit(fx: &CountFixture, alpha: f64) -> BayesOracle {
        let classes: Vec<Star> = fx.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let f = fx.n_features();
        let n = fx.labels.len() as f64;
        let mut prior = Vec::new();
        let mut theta = Vec::new();
        for &c in &classes {
            let rows: Vec<&Vec<f64>> =
                fx.counts.iter().zip(&fx.labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            prior.push(rows.len() as f64 / n);
            let mass: Vec<f64> = (0..f).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
            let total: f64 = mass.iter().sum();
            theta.push(mass.iter().map(|m| (alpha + m) / (alpha * f as f64 + total)).collect::<Vec<f64>>());
        }
        BayesOracle {
            classes,
            log_prior: prior.iter().map(|p: &f64| p.ln()).collect(),
            log_likelihood: theta.iter().map(|t: &Vec<f64>| t.iter().map(|v| v.ln()).collect()).collect(),
            theta,
            prior,
        }
    }

    /// `P(c) Π_f θ_cf^x_f` for every class, computed in linear space.
    pub fn joint(&self, doc: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|k| {
                let mut p = self.prior[k];
                for (j, &x) in doc.iter().enumerate() {
                    p *= self.theta[k][j].powf(x);
                }
                p
            })
            .collect()
    }

    /// The most probable class; ties go to the lowest class.
    pub fn predict(&self, doc: &[f64]) -> Star {
        let joint = self.joint(doc);
        let mut best = 0;
        for k in 1..joint.len() {
            if joint[k] > joint[best] {
                best = k;
            }
        }
        self.classes[best]
    }
}

/// Central differences `(f(θ + h eᵢ) − f(θ − h eᵢ)) / 2h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Minimizes a two-parameter function by grid search with successive
/// zooming, starting from `[-range, range]²` at step `range / 200`.
pub fn grid_minimum(f: impl Fn(f64, f64) -> f64, range: f64) -> (f64, f64, f64) {
    let mut step = range / 200.0;
    let (mut cx, mut cy, mut radius) = (0.0, 0.0, range);
    let mut best = (f(0.0, 0.0), 0.0, 0.0);
    while step > 1e-7 {
        let k = (radius / step).ceil() as i64;
        for i in -k..=k {
            for j in -k..=k {
                let (x, y) = (cx + i as f64 * step, cy + j as f64 * step);
                let v = f(x, y);
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        (cx, cy) = (best.1, best.2);
        radius = 3.0 * step;
        step /= 10.0;
    }
    best
}

/// `n` points uniform in `[-1, 1]²` labelled by the side of `x = y`, with
/// points closer than `margin` to the line rejected.
pub fn separable_points(n: usize, margin: f64, seed: u64) -> (DenseMatrix, Vec<Star>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let d = (x - y) / 2f64.sqrt();
        if d.abs() < margin {
            continue;
        }
        data.extend([x, y]);
        labels.push(if d > 0.0 { star(5) } else { star(1) });
    }
    (DenseMatrix::new(n, 2, data).unwrap(), labels)
}

/// Standard normal entries via Box-Muller, row-major.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows * cols)
        .map(|_| {
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let v: f64 = rng.random();
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        })
        .collect()
}
