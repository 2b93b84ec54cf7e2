//! Latent semantic indexing over a document-by-term matrix.
//!
//! The feature matrix `X` is stored documents × terms, i.e. the transpose of
//! a term-document matrix `M = Xᵀ = U S Vᵀ`. The term-side factor `U_t`
//! (terms × t) is kept in [`LsiModel`]; the document-side factor `V_t`
//! (documents × t, unscaled) is the topic feature matrix. A new document
//! row `x` folds in as `x · U_t · S_t⁻¹`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// Matrix-free access for the SVD solver.
pub trait LinearOperator: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `A · x`
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ · y`
    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn n_rows(&self) -> usize {
        self.nrows()
    }

    fn n_cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
}

/// A sparse matrix paired with its transpose so both products are
/// row-parallel gathers.
pub struct SparseOperator<'a> {
    a: &'a SparseMatrix,
    at: SparseMatrix,
}

impl<'a> SparseOperator<'a> {
    pub fn new(a: &'a SparseMatrix) -> Self {
        SparseOperator { a, at: a.transpose() }
    }
}

fn sparse_times_dense(a: &SparseMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    // Column-major storage of xᵀ is the row-major storage of x.
    let x_rows = x.transpose();
    let out = a.mul_dense(x_rows.as_slice(), k);
    DMatrix::from_row_slice(a.n_rows(), k, &out)
}

impl LinearOperator for SparseOperator<'_> {
    fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.a.n_cols()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        sparse_times_dense(self.a, x)
    }

    fn apply_transpose(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        sparse_times_dense(&self.at, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    /// Extra sketch columns beyond the requested rank.
    pub oversample: usize,
    /// Subspace iterations run before any convergence check.
    pub power_iters: usize,
    /// Stop once every retained triplet has `‖A vᵢ − σᵢ uᵢ‖ ≤ tol · σ₁`.
    /// `None` runs exactly `power_iters` iterations.
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { oversample: 10, power_iters: 4, tol: Some(1e-10), max_iters: 1000, seed: 0 }
    }
}

/// Leading singular triplets, `σ` non-increasing.
#[derive(Debug, Clone)]
pub struct Svd {
    /// m × t
    pub left: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// n × t
    pub right: DMatrix<f64>,
    pub iterations: usize,
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Randomized range finder followed by subspace iteration and a
/// Rayleigh-Ritz step (Halko, Martinsson & Tropp). The sketch width is
/// `t + oversample`, capped at `min(m, n)`; at the cap the result is exact.
pub fn truncated_svd<A: LinearOperator>(a: &A, t: usize, opts: &SvdOptions) -> Result<Svd> {
    let (m, n) = (a.n_rows(), a.n_cols());
    let full = m.min(n);
    if t == 0 || t > full {
        return Err(Error::invalid(format!("rank {t} outside 1..={full} for a {m} x {n} matrix")));
    }
    let width = (t + opts.oversample).min(full);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(a.apply(&omega));

    let mut iteration = 0;
    let mut worst_residual = f64::INFINITY;
    loop {
        // B = Qᵀ A, computed as (Aᵀ Q)ᵀ.
        let w = a.apply_transpose(&q);
        let svd = w.transpose().svd(true, true);
        let ub = svd.u.expect("requested u");
        let vt = svd.v_t.expect("requested v_t");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let ub = DMatrix::from_fn(ub.nrows(), width, |r, c| ub[(r, order[c])]);
        let v = DMatrix::from_fn(n, width, |r, c| vt[(order[c], r)]);
        let u = &q * &ub;

        let stop_now = match opts.tol {
            None => iteration >= opts.power_iters,
            Some(_) if iteration < opts.power_iters => false,
            Some(tol) => {
                let av = a.apply(&v.columns(0, t).into_owned());
                let scale = sigma[0].max(f64::MIN_POSITIVE);
                worst_residual =
                    (0..t).map(|i| (av.column(i) - u.column(i) * sigma[i]).norm() / scale).fold(0.0, f64::max);
                worst_residual <= tol || width == full
            }
        };
        if stop_now {
            return Ok(finish(u, sigma, v, t, iteration));
        }
        iteration += 1;
        if iteration > opts.max_iters {
            return Err(Error::NonConvergence {
                solver: "truncated svd",
                iterations: opts.max_iters,
                detail: format!("worst relative residual {worst_residual:.3e}"),
            });
        }
        q = orthonormal_basis(a.apply(&orthonormal_basis(w)));
    }
}

/// Truncates to `t` and makes the largest-magnitude entry of each right
/// (term-side) vector positive.
fn finish(u: DMatrix<f64>, sigma: Vec<f64>, v: DMatrix<f64>, t: usize, iterations: usize) -> Svd {
    let mut left = u.columns(0, t).into_owned();
    let mut right = v.columns(0, t).into_owned();
    for c in 0..t {
        let mut pivot = 0;
        for r in 0..right.nrows() {
            if right[(r, c)].abs() > right[(pivot, c)].abs() {
                pivot = r;
            }
        }
        if right[(pivot, c)] < 0.0 {
            right.column_mut(c).neg_mut();
            left.column_mut(c).neg_mut();
        }
    }
    Svd { left, sigma: sigma[..t].to_vec(), right, iterations }
}

/// The leading `t_max` singular values, for elbow plots.
pub fn singular_value_profile(m: &SparseMatrix, t_max: usize, opts: &SvdOptions) -> Result<Vec<f64>> {
    Ok(truncated_svd(&SparseOperator::new(m), t_max, opts)?.sigma)
}

pub fn profile_csv(sigma: &[f64]) -> String {
    let mut out = String::from("rank,sigma\n");
    for (i, s) in sigma.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, s));
    }
    out
}

/// Fitted term-side factor and singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct LsiModel {
    /// terms × t, orthonormal columns
    term_topics: DenseMatrix,
    sigma: Vec<f64>,
}

impl LsiModel {
    pub fn n_features(&self) -> usize {
        self.term_topics.n_rows()
    }

    pub fn t_star(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn term_topics(&self) -> &DenseMatrix {
        &self.term_topics
    }

    fn validate(term_topics: &DenseMatrix, sigma: &[f64]) -> std::result::Result<(), String> {
        if sigma.is_empty() || term_topics.n_cols() != sigma.len() {
            return Err("topic count mismatch".into());
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err("singular values must be finite and positive".into());
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err("singular values must be non-increasing".into());
        }
        if term_topics.as_slice().iter().any(|v| !v.is_finite()) {
            return Err("non-finite factor entry".into());
        }
        Ok(())
    }

    const MAGIC: &'static [u8; 4] = b"RFLS";
    const VERSION: u32 = 1;

    /// Binary snapshot, version 1:
    ///
    /// ```text
    /// magic "RFLS" | u32 version | u64 n_features | u64 t
    /// t × f64 sigma | (n_features · t) × f64 term-topic factor, row-major
    /// ```
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new(Self::MAGIC, Self::VERSION);
        enc.usize(self.n_features());
        enc.usize(self.t_star());
        enc.f64_slice(&self.sigma);
        enc.f64_slice(self.term_topics.as_slice());
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::open("lsi snapshot", bytes, Self::MAGIC, Self::VERSION)?;
        let n_features = dec.usize()?;
        let t = dec.count(8)?;
        let sigma = dec.f64_vec(t)?;
        let len = n_features.checked_mul(t).ok_or_else(|| dec.err("factor size overflow"))?;
        let data = dec.f64_vec(len)?;
        dec.finish()?;
        let term_topics = DenseMatrix::new(n_features, t, data)?;
        Self::validate(&term_topics, &sigma).map_err(|m| Error::decode("lsi snapshot", m))?;
        Ok(LsiModel { term_topics, sigma })
    }
}

/// Fits `t` topics on `m` (documents × terms) and returns the model with
/// the documents' topic coordinates.
pub fn fit_lsi(m: &SparseMatrix, t: usize, opts: &SvdOptions) -> Result<(LsiModel, DenseMatrix)> {
    let svd = truncated_svd(&SparseOperator::new(m), t, opts)?;
    let floor = svd.sigma[0] * 1e-12;
    if let Some(rank) = svd.sigma.iter().position(|&s| s <= floor) {
        return Err(Error::invalid(format!("{t} topics requested but the matrix has numerical rank {rank}")));
    }
    let term_topics = dmatrix_to_dense(&svd.right);
    let topics = dmatrix_to_dense(&svd.left);
    Ok((LsiModel { term_topics, sigma: svd.sigma }, topics))
}

fn dmatrix_to_dense(m: &DMatrix<f64>) -> DenseMatrix {
    let row_major = m.transpose();
    DenseMatrix::new(m.nrows(), m.ncols(), row_major.as_slice().to_vec()).expect("shape")
}

/// Fold-in: row `d` ↦ `x_d · U_t · S_t⁻¹`.
pub fn project(docs: &SparseMatrix, model: &LsiModel) -> Result<DenseMatrix> {
    if docs.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), actual: docs.n_cols() });
    }
    let t = model.t_star();
    let mut out = docs.mul_dense(model.term_topics.as_slice(), t);
    for row in out.chunks_mut(t) {
        for (v, s) in row.iter_mut().zip(&model.sigma) {
            *v /= s;
        }
    }
    DenseMatrix::new(docs.n_rows(), t, out)
}
