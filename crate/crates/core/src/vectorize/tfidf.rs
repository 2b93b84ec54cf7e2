use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{SparseMatrix, Weighting};
use crate::vectorize::Vocabulary;

/// Smoothed inverse document frequencies: `ln((1 + n) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    idf: Vec<f64>,
}

pub fn idf_weight(n_docs: u64, doc_freq: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

impl TfIdfModel {
    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_features(&self) -> usize {
        self.idf.len()
    }
}

pub fn fit_tfidf(counts: &SparseMatrix, vocab: &Vocabulary) -> Result<TfIdfModel> {
    if counts.n_cols() != vocab.len() {
        return Err(Error::DimensionMismatch { expected: vocab.len(), actual: counts.n_cols() });
    }
    let n = vocab.n_docs();
    Ok(TfIdfModel { idf: vocab.doc_freqs().iter().map(|&df| idf_weight(n, df)).collect() })
}

/// Scales counts by idf and L2-normalizes each non-empty row.
pub fn transform_tfidf(counts: &SparseMatrix, model: &TfIdfModel) -> Result<SparseMatrix> {
    if counts.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), actual: counts.n_cols() });
    }
    let idf = &model.idf;
    let values: Vec<f64> = (0..counts.n_rows())
        .into_par_iter()
        .flat_map_iter(|r| {
            let (cols, vals) = counts.row(r);
            let weighted: Vec<f64> = cols.iter().zip(vals).map(|(&c, &v)| v * idf[c]).collect();
            let norm = weighted.iter().map(|w| w * w).sum::<f64>().sqrt();
            weighted.into_iter().map(move |w| w / norm)
        })
        .collect();
    let mut out = counts.clone();
    out.values_mut().copy_from_slice(&values);
    out.set_weighting(Weighting::TfIdf);
    Ok(out)
}
