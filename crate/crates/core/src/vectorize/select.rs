use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;

/// Per-feature statistic used to rank TF-IDF columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankBy {
    /// Largest weight the feature takes in any document.
    #[default]
    Max,
    /// Mean weight over all documents (implicit zeros included).
    Mean,
}

/// Feature ids ordered by descending score, ties by ascending id.
pub fn rank_features(weighted: &SparseMatrix, by: RankBy) -> Vec<usize> {
    let mut score = vec![0.0f64; weighted.n_cols()];
    for (&c, &v) in weighted.col_indices().iter().zip(weighted.values()) {
        match by {
            RankBy::Max => score[c] = score[c].max(v),
            RankBy::Mean => score[c] += v,
        }
    }
    let mut order: Vec<usize> = (0..weighted.n_cols()).collect();
    // Mean divides every score by the same row count, so ordering by the
    // sum is identical.
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    order
}

/// The leading `k` entries of a ranking, applicable to any matrix over the
/// same feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    columns: Vec<usize>,
    new_id: Vec<Option<usize>>,
}

impl Selection {
    pub fn top_k(ranking: &[usize], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cannot select zero features"));
        }
        if k > ranking.len() {
            return Err(Error::invalid(format!("requested {k} features but only {} are available", ranking.len())));
        }
        let width = ranking.iter().copied().max().map_or(0, |m| m + 1);
        let mut new_id = vec![None; width];
        for (i, &c) in ranking[..k].iter().enumerate() {
            if new_id[c].replace(i).is_some() {
                return Err(Error::invalid(format!("feature {c} ranked twice")));
            }
        }
        Ok(Selection { columns: ranking[..k].to_vec(), new_id })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Original feature ids, in output column order.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Keeps the selected columns, renumbered `0..k` in ranking order.
    /// Values are copied unchanged; rows are not re-normalized.
    pub fn apply(&self, m: &SparseMatrix) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(m.n_rows() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..m.n_rows() {
            row.clear();
            let (cs, vs) = m.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                if let Some(Some(n)) = self.new_id.get(c) {
                    row.push((*n, v));
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix::from_parts_unchecked(self.len(), row_ptr, cols, vals, m.weighting())
    }
}

pub fn select_top_k(m: &SparseMatrix, ranking: &[usize], k: usize) -> Result<SparseMatrix> {
    if ranking.iter().any(|&c| c >= m.n_cols()) {
        return Err(Error::invalid("ranking refers to a column outside the matrix"));
    }
    Ok(Selection::top_k(ranking, k)?.apply(m))
}
