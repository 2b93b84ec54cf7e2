// Checks like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod lsi;
pub mod matrix;
pub mod preprocess;
pub mod synthetic;
pub mod vectorize;

mod codec;

pub use error::{Error, Result};
