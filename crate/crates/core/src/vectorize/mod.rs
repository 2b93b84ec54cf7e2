//! N-gram vocabularies, count matrices, TF-IDF weighting and top-k
//! feature selection.

mod select;
mod tfidf;
mod vocab;

pub use select::{rank_features, select_top_k, RankBy, Selection};
pub use tfidf::{fit_tfidf, idf_weight, transform_tfidf, TfIdfModel};
pub use vocab::{build_vocabulary, count_matrix, NgramSpec, Vocabulary};
