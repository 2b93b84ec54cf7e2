//! Multi-class linear classifiers sharing one fit/predict contract.
//!
//! Every trained model scores a row as `W x + b` per class (for naive
//! Bayes `W` holds log-likelihoods and `b` log-priors) and predicts the
//! arg-max. Classes are kept in ascending star order and ties go to the
//! first, i.e. lowest, star.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{Decoder, Encoder};
use crate::corpus::Star;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

mod grid;
mod lbfgs;
pub mod linsvc;
pub mod logistic;
pub mod naive_bayes;
pub mod perceptron;

pub use grid::{grid_search_c, GridCell, GridSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    LogReg,
    NaiveBayes,
    Perceptron,
    LinearSvc,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::LogReg, ClassifierKind::NaiveBayes, ClassifierKind::Perceptron, ClassifierKind::LinearSvc];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logreg",
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::Perceptron => "perceptron",
            ClassifierKind::LinearSvc => "linsvc",
        }
    }

    fn tag(self) -> u8 {
        match self {
            ClassifierKind::LogReg => 0,
            ClassifierKind::NaiveBayes => 1,
            ClassifierKind::Perceptron => 2,
            ClassifierKind::LinearSvc => 3,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ClassifierKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::invalid(format!("unknown classifier {s:?} (expected logreg, nb, perceptron or linsvc)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LogRegMode {
    #[default]
    Multinomial,
    OneVsRest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperParams {
    /// Inverse regularization strength (logreg, linsvc).
    pub c: f64,
    pub tol: f64,
    /// Perceptron passes over the training set.
    pub epochs: usize,
    /// Naive Bayes additive smoothing.
    pub alpha: f64,
    pub seed: u64,
    /// Iteration cap for logreg (L-BFGS steps) and linsvc (epochs per class).
    pub max_iter: usize,
    pub logreg_mode: LogRegMode,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            c: 1.0,
            tol: 1e-3,
            epochs: 50,
            alpha: 1.0,
            seed: 0,
            max_iter: 1000,
            logreg_mode: LogRegMode::Multinomial,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Labels mapped onto the sorted set of classes present.
#[derive(Debug, Clone)]
pub struct Labels {
    pub classes: Vec<Star>,
    /// Per row, index into `classes`.
    pub index: Vec<usize>,
}

impl Labels {
    pub fn new(labels: &[Star]) -> Result<Self> {
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::invalid(format!("need at least two distinct labels to fit, found {}", classes.len())));
        }
        let mut lookup = [usize::MAX; 5];
        for (i, c) in classes.iter().enumerate() {
            lookup[c.index()] = i;
        }
        Ok(Labels { index: labels.iter().map(|s| lookup[s.index()]).collect(), classes })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

fn check_rows<X: RowMatrix>(x: &X, labels: &[Star]) -> Result<()> {
    if x.n_rows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: x.n_rows(), actual: labels.len() });
    }
    Ok(())
}

/// What a fit run did, for the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// L-BFGS steps, perceptron epochs, or the largest per-class SVC epoch count.
    pub iterations: usize,
    pub objective: Option<f64>,
    pub converged: bool,
    /// Perceptron: mistakes made during the last epoch.
    pub last_epoch_updates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    kind: ClassifierKind,
    classes: Vec<Star>,
    n_features: usize,
    hyper: HyperParams,
    /// classes × features, row-major
    weights: Vec<f64>,
    bias: Vec<f64>,
    diagnostics: Diagnostics,
}

impl TrainedModel {
    pub(crate) fn new(
        kind: ClassifierKind,
        classes: Vec<Star>,
        n_features: usize,
        hyper: HyperParams,
        weights: Vec<f64>,
        bias: Vec<f64>,
        diagnostics: Diagnostics,
    ) -> Self {
        debug_assert_eq!(weights.len(), classes.len() * n_features);
        debug_assert_eq!(bias.len(), classes.len());
        TrainedModel { kind, classes, n_features, hyper, weights, bias, diagnostics }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn classes(&self) -> &[Star] {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Weight row of class `k` (log-likelihoods for naive Bayes).
    pub fn weights(&self, k: usize) -> &[f64] {
        &self.weights[k * self.n_features..(k + 1) * self.n_features]
    }

    /// Per-class bias (log-priors for naive Bayes).
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn scores<X: RowMatrix>(&self, x: &X, row: usize) -> Vec<f64> {
        (0..self.classes.len())
            .map(|k| {
                let w = self.weights(k);
                let dot = if self.kind == ClassifierKind::NaiveBayes {
                    // Skip zero entries so -inf log-likelihoods (alpha = 0) never meet 0.
                    let mut acc = 0.0;
                    x.row_visit(row, &mut |f, v| acc += v * w[f]);
                    acc
                } else {
                    x.row_dot(row, w)
                };
                dot + self.bias[k]
            })
            .collect()
    }

    /// Scales every class score vector by `factor`.
    pub fn scaled(&self, factor: f64) -> TrainedModel {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out.bias.iter_mut().for_each(|b| *b *= factor);
        out
    }

    const MAGIC: &'static [u8; 4] = b"RFMD";
    const VERSION: u32 = 1;

    /// Binary snapshot, version 1:
    ///
    /// ```text
    /// magic "RFMD" | u32 version | u8 kind | u64 n_features | u64 n_classes
    /// n_classes × u8 star
    /// f64 c | f64 tol | u64 epochs | f64 alpha | u64 seed | u64 max_iter | u8 logreg mode
    /// (n_classes · n_features) × f64 weights | n_classes × f64 bias
    /// u64 iterations | u8 flags (1 converged, 2 objective, 4 epoch updates)
    /// [f64 objective] [u64 last epoch updates]
    /// ```
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new(Self::MAGIC, Self::VERSION);
        enc.u8(self.kind.tag());
        enc.usize(self.n_features);
        enc.usize(self.classes.len());
        for c in &self.classes {
            enc.u8(c.value());
        }
        let h = &self.hyper;
        enc.f64(h.c);
        enc.f64(h.tol);
        enc.usize(h.epochs);
        enc.f64(h.alpha);
        enc.u64(h.seed);
        enc.usize(h.max_iter);
        enc.u8(match h.logreg_mode {
            LogRegMode::Multinomial => 0,
            LogRegMode::OneVsRest => 1,
        });
        enc.f64_slice(&self.weights);
        enc.f64_slice(&self.bias);
        let d = &self.diagnostics;
        enc.usize(d.iterations);
        enc.u8(u8::from(d.converged)
            | u8::from(d.objective.is_some()) << 1
            | u8::from(d.last_epoch_updates.is_some()) << 2);
        if let Some(v) = d.objective {
            enc.f64(v);
        }
        if let Some(v) = d.last_epoch_updates {
            enc.usize(v);
        }
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::open("model snapshot", bytes, Self::MAGIC, Self::VERSION)?;
        let tag = dec.u8()?;
        let kind = ClassifierKind::from_tag(tag).ok_or_else(|| dec.err(format!("unknown classifier tag {tag}")))?;
        let n_features = dec.usize()?;
        let n_classes = dec.count(1)?;
        if !(2..=5).contains(&n_classes) {
            return Err(dec.err(format!("{n_classes} classes")));
        }
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let v = dec.u8()?;
            classes.push(Star::new(v).ok_or_else(|| dec.err(format!("star value {v}")))?);
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(dec.err("classes not strictly ascending"));
        }
        let hyper = HyperParams {
            c: dec.f64()?,
            tol: dec.f64()?,
            epochs: dec.usize()?,
            alpha: dec.f64()?,
            seed: dec.u64()?,
            max_iter: dec.usize()?,
            logreg_mode: match dec.u8()? {
                0 => LogRegMode::Multinomial,
                1 => LogRegMode::OneVsRest,
                other => return Err(dec.err(format!("unknown logreg mode {other}"))),
            },
        };
        hyper.validate().map_err(|e| Error::decode("model snapshot", e.to_string()))?;
        let len = n_features.checked_mul(n_classes).ok_or_else(|| dec.err("weight size overflow"))?;
        let weights = dec.f64_vec(len)?;
        let bias = dec.f64_vec(n_classes)?;
        let iterations = dec.usize()?;
        let flags = dec.u8()?;
        if flags > 7 {
            return Err(dec.err(format!("unknown diagnostic flags {flags:#x}")));
        }
        let objective = if flags & 2 != 0 { Some(dec.f64()?) } else { None };
        let last_epoch_updates = if flags & 4 != 0 { Some(dec.usize()?) } else { None };
        dec.finish()?;
        Ok(TrainedModel {
            kind,
            classes,
            n_features,
            hyper,
            weights,
            bias,
            diagnostics: Diagnostics { iterations, objective, converged: flags & 1 != 0, last_epoch_updates },
        })
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

pub fn fit<X: RowMatrix>(kind: ClassifierKind, x: &X, labels: &[Star], hp: &HyperParams) -> Result<TrainedModel> {
    match kind {
        ClassifierKind::LogReg => logistic::fit_logreg(x, labels, hp),
        ClassifierKind::NaiveBayes => naive_bayes::fit_nb(x, labels, hp),
        ClassifierKind::Perceptron => perceptron::fit_perceptron(x, labels, hp),
        ClassifierKind::LinearSvc => linsvc::fit_linsvc(x, labels, hp),
    }
}

pub fn predict<X: RowMatrix>(model: &TrainedModel, x: &X) -> Result<Vec<Star>> {
    if x.n_cols() != model.n_features {
        return Err(Error::DimensionMismatch { expected: model.n_features, actual: x.n_cols() });
    }
    Ok((0..x.n_rows()).into_par_iter().map(|r| model.classes[argmax(&model.scores(x, r))]).collect())
}

/// Fixed row ranges for reductions whose result must not depend on the
/// thread count.
pub(crate) fn row_chunks(n: usize) -> Vec<std::ops::Range<usize>> {
    const CHUNKS: usize = 32;
    let size = n.div_ceil(CHUNKS).max(1);
    (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
}
