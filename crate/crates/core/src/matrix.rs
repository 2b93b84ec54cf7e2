//! Document-major sparse (CSR) and dense row-major matrices.

use rayon::prelude::*;

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};

/// What the stored values of a [`SparseMatrix`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Counts,
    TfIdf,
}

/// Compressed sparse rows. Rows are documents, columns are features.
///
/// Column ids are strictly increasing within each row and every stored
/// value is finite and strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    weighting: Weighting,
}

impl SparseMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Entries may be
    /// unsorted; duplicate columns are summed and zeros dropped.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>, weighting: Weighting) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= n_cols {
                    return Err(Error::invalid(format!("column {c} out of range {n_cols}")));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("entry value {v} is not a finite non-negative number")));
                }
                if last == Some(c) {
                    *values.last_mut().expect("previous entry") += v;
                    continue;
                }
                col_idx.push(c);
                values.push(v);
                last = Some(c);
            }
            row_ptr.push(col_idx.len());
        }
        let mut m = SparseMatrix { n_rows: row_ptr.len() - 1, n_cols, row_ptr, col_idx, values, weighting };
        m.drop_zeros();
        Ok(m)
    }

    /// Row-major dense input; zeros are not stored.
    pub fn from_dense(n_cols: usize, data: &[f64], weighting: Weighting) -> Result<Self> {
        if n_cols == 0 || !data.len().is_multiple_of(n_cols) {
            return Err(Error::invalid("dense data length is not a multiple of the column count"));
        }
        let rows = data
            .chunks(n_cols)
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(c, &v)| (c, v)).collect())
            .collect();
        Self::from_rows(n_cols, rows, weighting)
    }

    pub(crate) fn from_parts_unchecked(
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
        weighting: Weighting,
    ) -> Self {
        debug_assert_eq!(col_idx.len(), values.len());
        SparseMatrix { n_rows: row_ptr.len() - 1, n_cols, row_ptr, col_idx, values, weighting }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v > 0.0) {
            return;
        }
        let mut row_ptr = Vec::with_capacity(self.row_ptr.len());
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if v > 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn set_weighting(&mut self, weighting: Weighting) {
        self.weighting = weighting;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |i| vals[i])
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.n_cols + c] = v;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (cols, vals) = self.row(r);
            col_idx.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_ptr.push(col_idx.len());
        }
        Self::from_parts_unchecked(self.n_cols, row_ptr, col_idx, values, self.weighting)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        SparseMatrix { n_rows: self.n_cols, n_cols: self.n_rows, row_ptr, col_idx, values, weighting: self.weighting }
    }

    /// `self · x` where `x` is row-major `n_cols × k`; result is row-major `n_rows × k`.
    pub fn mul_dense(&self, x: &[f64], k: usize) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols * k);
        let mut out = vec![0.0; self.n_rows * k];
        if k == 0 {
            return out;
        }
        out.par_chunks_mut(k).enumerate().for_each(|(r, dst)| {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = &x[c * k..(c + 1) * k];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        });
        out
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.row_ptr.len() != self.n_rows + 1 || self.row_ptr[0] != 0 {
            return Err("row pointer length".into());
        }
        if *self.row_ptr.last().expect("non-empty") != self.col_idx.len() {
            return Err("row pointer does not end at nnz".into());
        }
        for r in 0..self.n_rows {
            let (start, end) = (self.row_ptr[r], self.row_ptr[r + 1]);
            if start > end {
                return Err(format!("row pointer decreases at row {r}"));
            }
            let cols = &self.col_idx[start..end];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("columns of row {r} not strictly increasing"));
            }
            if cols.last().is_some_and(|&c| c >= self.n_cols) {
                return Err(format!("column id out of range in row {r}"));
            }
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(format!("stored value {v} is not finite and positive"));
        }
        Ok(())
    }

    const MAGIC: &'static [u8; 4] = b"RFSM";
    const VERSION: u32 = 1;

    /// Binary snapshot, version 1:
    ///
    /// ```text
    /// magic "RFSM" | u32 version | u8 weighting (0 counts, 1 tf-idf)
    /// u64 rows | u64 cols | u64 nnz
    /// (rows + 1) × u64 row pointer | nnz × u64 column id | nnz × f64 value
    /// ```
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new(Self::MAGIC, Self::VERSION);
        enc.u8(match self.weighting {
            Weighting::Counts => 0,
            Weighting::TfIdf => 1,
        });
        enc.usize(self.n_rows);
        enc.usize(self.n_cols);
        enc.usize(self.nnz());
        enc.usize_slice(&self.row_ptr);
        enc.usize_slice(&self.col_idx);
        enc.f64_slice(&self.values);
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::open("matrix snapshot", bytes, Self::MAGIC, Self::VERSION)?;
        let weighting = match dec.u8()? {
            0 => Weighting::Counts,
            1 => Weighting::TfIdf,
            other => return Err(dec.err(format!("unknown weighting tag {other}"))),
        };
        let n_rows = dec.usize()?;
        let n_cols = dec.usize()?;
        let nnz = dec.usize()?;
        let ptr_len = n_rows.checked_add(1).ok_or_else(|| dec.err("row count overflow"))?;
        let row_ptr = dec.usize_vec(ptr_len)?;
        let col_idx = dec.usize_vec(nnz)?;
        let values = dec.f64_vec(nnz)?;
        dec.finish()?;
        let m = SparseMatrix { n_rows, n_cols, row_ptr, col_idx, values, weighting };
        m.validate().map_err(|msg| Error::decode("matrix snapshot", msg))?;
        Ok(m)
    }

    /// Exact text dump: a header line, then one `row col value` line per
    /// stored entry. Values use the shortest representation that parses
    /// back to the same `f64`.
    pub fn debug_dump(&self) -> String {
        let mut out =
            format!("# rows={} cols={} nnz={} weighting={:?}\n", self.n_rows, self.n_cols, self.nnz(), self.weighting);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.push_str(&format!("{r} {c} {v:?}\n"));
            }
        }
        out
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch { expected: n_rows * n_cols, actual: data.len() });
        }
        Ok(DenseMatrix { n_rows, n_cols, data })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        DenseMatrix { n_rows: rows.len(), n_cols: self.n_cols, data }
    }

    /// Keeps the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Result<DenseMatrix> {
        if k == 0 || k > self.n_cols {
            return Err(Error::invalid(format!("cannot keep {k} of {} columns", self.n_cols)));
        }
        let mut data = Vec::with_capacity(self.n_rows * k);
        for r in 0..self.n_rows {
            data.extend_from_slice(&self.row(r)[..k]);
        }
        Ok(DenseMatrix { n_rows: self.n_rows, n_cols: k, data })
    }
}

/// Row subsets, for cross-validation inside a training set.
pub trait SubsetRows {
    fn subset(&self, rows: &[usize]) -> Self;
}

impl SubsetRows for SparseMatrix {
    fn subset(&self, rows: &[usize]) -> Self {
        self.select_rows(rows)
    }
}

impl SubsetRows for DenseMatrix {
    fn subset(&self, rows: &[usize]) -> Self {
        self.select_rows(rows)
    }
}

/// Row access used by the classifiers, so they train on sparse n-gram
/// matrices and dense topic matrices alike.
pub trait RowMatrix: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn row_dot(&self, row: usize, w: &[f64]) -> f64;
    /// `out += alpha * row`
    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]);
    fn row_sq_norm(&self, row: usize) -> f64;
    fn row_sum(&self, row: usize) -> f64;
    /// Calls `f(column, value)` for each non-zero entry of `row`.
    fn row_visit(&self, row: usize, f: &mut dyn FnMut(usize, f64));
    /// Smallest entry, counting implicit zeros of sparse storage.
    fn min_value(&self) -> f64;
}

impl RowMatrix for SparseMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        let (cols, vals) = self.row(row);
        cols.iter().zip(vals).map(|(&c, &v)| v * w[c]).sum()
    }

    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]) {
        let (cols, vals) = self.row(row);
        for (&c, &v) in cols.iter().zip(vals) {
            out[c] += alpha * v;
        }
    }

    fn row_sq_norm(&self, row: usize) -> f64 {
        self.row(row).1.iter().map(|v| v * v).sum()
    }

    fn row_sum(&self, row: usize) -> f64 {
        self.row(row).1.iter().sum()
    }

    fn row_visit(&self, row: usize, f: &mut dyn FnMut(usize, f64)) {
        let (cols, vals) = self.row(row);
        for (&c, &v) in cols.iter().zip(vals) {
            f(c, v);
        }
    }

    fn min_value(&self) -> f64 {
        // Stored values are positive by construction.
        0.0
    }
}

impl RowMatrix for DenseMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn row_dot(&self, row: usize, w: &[f64]) -> f64 {
        self.row(row).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn row_axpy(&self, row: usize, alpha: f64, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.row(row)) {
            *o += alpha * v;
        }
    }

    fn row_sq_norm(&self, row: usize) -> f64 {
        self.row(row).iter().map(|v| v * v).sum()
    }

    fn row_sum(&self, row: usize) -> f64 {
        self.row(row).iter().sum()
    }

    fn row_visit(&self, row: usize, f: &mut dyn FnMut(usize, f64)) {
        for (c, &v) in self.row(row).iter().enumerate() {
            if v != 0.0 {
                f(c, v);
            }
        }
    }

    fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
