use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{kfold_split, Metrics};
use crate::classify::{fit, grid_search_c, predict, ClassifierKind, HyperParams};
use crate::corpus::{Review, Star};
use crate::error::{Error, Result, Stage};
use crate::lsi::{fit_lsi, project, SvdOptions};
use crate::matrix::{DenseMatrix, RowMatrix, SparseMatrix, SubsetRows};
use crate::preprocess::{Preprocessor, TokenSeq};
use crate::vectorize::{
    build_vocabulary, count_matrix, fit_tfidf, rank_features, transform_tfidf, NgramSpec, RankBy, Selection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    Uni,
    UniBi,
    UniBiTri,
    Lsi,
}

impl ExtractorKind {
    pub const ALL: [ExtractorKind; 4] =
        [ExtractorKind::Uni, ExtractorKind::UniBi, ExtractorKind::UniBiTri, ExtractorKind::Lsi];

    pub fn name(self) -> &'static str {
        match self {
            ExtractorKind::Uni => "uni",
            ExtractorKind::UniBi => "uni_bi",
            ExtractorKind::UniBiTri => "uni_bi_tri",
            ExtractorKind::Lsi => "lsi",
        }
    }

    /// Longest n-gram in the vocabulary; LSI is built on unigrams.
    pub fn ngram_max(self) -> u8 {
        match self {
            ExtractorKind::Uni | ExtractorKind::Lsi => 1,
            ExtractorKind::UniBi => 2,
            ExtractorKind::UniBiTri => 3,
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtractorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExtractorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown extractor {s:?}; expected uni, uni_bi, uni_bi_tri or lsi")))
    }
}

/// Matrix the LSI factorization runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LsiInput {
    #[default]
    TfIdf,
    Counts,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractorConfig {
    pub kind: ExtractorKind,
    #[serde(skip)]
    pub rank_by: RankBy,
    pub lsi_input: LsiInput,
    #[serde(skip)]
    pub svd: SvdOptions,
    /// Fit vocabulary, IDF, ranking and LSI on training and held-out
    /// documents together. This leaks held-out statistics into the features.
    pub paper_faithful: bool,
}

impl ExtractorConfig {
    pub fn new(kind: ExtractorKind) -> Self {
        ExtractorConfig {
            kind,
            rank_by: RankBy::Max,
            lsi_input: LsiInput::TfIdf,
            svd: SvdOptions::default(),
            paper_faithful: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub hyper: HyperParams,
    /// When non-empty, C is chosen per training set by internal 3-fold CV.
    pub c_grid: Vec<f64>,
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind, hyper: HyperParams) -> Self {
        ClassifierConfig { kind, hyper, c_grid: Vec::new() }
    }
}

/// Preprocessed documents with their labels.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub tokens: Vec<TokenSeq>,
    pub labels: Vec<Star>,
}

impl Dataset {
    pub fn from_reviews(reviews: &[Review], pre: &Preprocessor) -> Self {
        let texts: Vec<&str> = reviews.iter().map(|r| r.text.as_str()).collect();
        Dataset { tokens: pre.tokens_all(&texts), labels: reviews.iter().map(|r| r.stars).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            tokens: rows.iter().map(|&i| self.tokens[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

type Staged<T> = std::result::Result<T, (Stage, Error)>;

fn at<T>(stage: Stage, r: Result<T>) -> Staged<T> {
    r.map_err(|e| (stage, e))
}

/// Features fitted on one training set, covering it and one held-out set.
enum Space {
    Ngram { train: SparseMatrix, held_out: SparseMatrix, ranking: Vec<usize> },
    Topics { train: DenseMatrix, held_out: DenseMatrix },
}

impl Space {
    fn fit(cfg: &ExtractorConfig, train: &[TokenSeq], held_out: &[TokenSeq], max_features: usize) -> Staged<Space> {
        let joined;
        let fit_docs = if cfg.paper_faithful {
            joined = [train, held_out].concat();
            &joined[..]
        } else {
            train
        };
        let spec = at(Stage::Vocabulary, NgramSpec::new(cfg.kind.ngram_max()))?;
        let vocab = at(Stage::Vocabulary, build_vocabulary(fit_docs, spec))?;
        let fit_counts = count_matrix(fit_docs, &vocab);
        let idf = at(Stage::Weighting, fit_tfidf(&fit_counts, &vocab))?;
        let train_counts = count_matrix(train, &vocab);
        let held_counts = count_matrix(held_out, &vocab);

        if cfg.kind == ExtractorKind::Lsi {
            let (fit_m, train_m, held_m) = match cfg.lsi_input {
                LsiInput::Counts => (fit_counts, train_counts, held_counts),
                LsiInput::TfIdf => (
                    at(Stage::Weighting, transform_tfidf(&fit_counts, &idf))?,
                    at(Stage::Weighting, transform_tfidf(&train_counts, &idf))?,
                    at(Stage::Weighting, transform_tfidf(&held_counts, &idf))?,
                ),
            };
            let (model, _) = at(Stage::Lsi, fit_lsi(&fit_m, max_features, &cfg.svd))?;
            return Ok(Space::Topics {
                train: at(Stage::Lsi, project(&train_m, &model))?,
                held_out: at(Stage::Lsi, project(&held_m, &model))?,
            });
        }

        let fit_weighted = at(Stage::Weighting, transform_tfidf(&fit_counts, &idf))?;
        let ranking = rank_features(&fit_weighted, cfg.rank_by);
        if max_features > ranking.len() {
            return Err((
                Stage::Selection,
                Error::invalid(format!("{max_features} features requested but the vocabulary has {}", ranking.len())),
            ));
        }
        Ok(Space::Ngram {
            train: at(Stage::Weighting, transform_tfidf(&train_counts, &idf))?,
            held_out: at(Stage::Weighting, transform_tfidf(&held_counts, &idf))?,
            ranking,
        })
    }
}

/// Feature matrices of one fold at one feature count, built exactly as the
/// curve builds them.
#[derive(Debug, Clone)]
pub enum FoldFeatures {
    Ngram { train: SparseMatrix, held_out: SparseMatrix },
    Topics { train: DenseMatrix, held_out: DenseMatrix },
}

/// Vectorizes a training and a held-out token set for one configuration.
pub fn fold_features(
    cfg: &ExtractorConfig,
    train: &[TokenSeq],
    held_out: &[TokenSeq],
    n_features: usize,
) -> Result<FoldFeatures> {
    let space = Space::fit(cfg, train, held_out, n_features).map_err(|(_, e)| e)?;
    Ok(match space {
        Space::Ngram { train, held_out, ranking } => {
            let sel = Selection::top_k(&ranking, n_features)?;
            FoldFeatures::Ngram { train: sel.apply(&train), held_out: sel.apply(&held_out) }
        }
        Space::Topics { train, held_out } => FoldFeatures::Topics {
            train: train.leading_columns(n_features)?,
            held_out: held_out.leading_columns(n_features)?,
        },
    })
}

/// A fold's fitted feature space with its training and validation labels.
type PreparedFold = (Space, Vec<Star>, Vec<Star>);

/// Outcome of fitting on one side and scoring both.
struct Scored {
    train: Metrics,
    held_out: Metrics,
    chosen_c: Option<f64>,
    model: crate::classify::TrainedModel,
}

fn score<X: RowMatrix + SubsetRows>(
    clf: &ClassifierConfig,
    train_x: &X,
    train_y: &[Star],
    held_x: &X,
    held_y: &[Star],
) -> Staged<Scored> {
    let mut hp = clf.hyper;
    let mut chosen_c = None;
    let tunable = matches!(clf.kind, ClassifierKind::LogReg | ClassifierKind::LinearSvc);
    if tunable && !clf.c_grid.is_empty() {
        let search = at(Stage::Fit, grid_search_c(clf.kind, train_x, train_y, &clf.c_grid, 3, &hp))?;
        hp.c = search.best_c;
        chosen_c = Some(search.best_c);
    }
    let model = at(Stage::Fit, fit(clf.kind, train_x, train_y, &hp))?;
    let train_pred = at(Stage::Predict, predict(&model, train_x))?;
    let held_pred = at(Stage::Predict, predict(&model, held_x))?;
    Ok(Scored {
        train: at(Stage::Predict, Metrics::score(&train_pred, train_y))?,
        held_out: at(Stage::Predict, Metrics::score(&held_pred, held_y))?,
        chosen_c,
        model,
    })
}

fn score_point(
    space: &Space,
    n_features: usize,
    clf: &ClassifierConfig,
    train_y: &[Star],
    held_y: &[Star],
) -> Staged<Scored> {
    match space {
        Space::Ngram { train, held_out, ranking } => {
            let sel = at(Stage::Selection, Selection::top_k(ranking, n_features))?;
            score(clf, &sel.apply(train), train_y, &sel.apply(held_out), held_y)
        }
        Space::Topics { train, held_out } => {
            let tr = at(Stage::Selection, train.leading_columns(n_features))?;
            let ho = at(Stage::Selection, held_out.leading_columns(n_features))?;
            score(clf, &tr, train_y, &ho, held_y)
        }
    }
}

/// Identifies the configuration behind a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub extractor: ExtractorKind,
    pub ngram_max: u8,
    pub n_features: usize,
    pub classifier: ClassifierKind,
    pub hyper: HyperParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train: Metrics,
    pub validation: Metrics,
    pub chosen_c: Option<f64>,
    pub wall_seconds: f64,
}

/// Mean and sample standard deviation across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl Summary {
    fn of(metrics: &[Metrics]) -> Summary {
        let (rmse_mean, rmse_std) = mean_std(&metrics.iter().map(|m| m.rmse).collect::<Vec<_>>());
        let (accuracy_mean, accuracy_std) = mean_std(&metrics.iter().map(|m| m.accuracy).collect::<Vec<_>>());
        Summary { rmse_mean, rmse_std, accuracy_mean, accuracy_std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub fingerprint: Fingerprint,
    pub folds: Vec<FoldResult>,
    pub train: Summary,
    pub validation: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub feature_count: usize,
    pub report: CvReport,
}

pub fn cross_validate(
    data: &Dataset,
    extractor: &ExtractorConfig,
    classifier: &ClassifierConfig,
    n_features: usize,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let mut curve = learning_curve(data, extractor, classifier, &[n_features], k, seed)?;
    Ok(curve.remove(0).report)
}

/// Cross-validates every feature count in `grid`. Each fold's vocabulary,
/// IDF, ranking and LSI factors are fitted once, at the largest grid value,
/// and truncated for the smaller ones.
pub fn learning_curve(
    data: &Dataset,
    extractor: &ExtractorConfig,
    classifier: &ClassifierConfig,
    grid: &[usize],
    k: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(Error::invalid("feature grid is empty"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("feature grid must be positive and strictly ascending"));
    }
    classifier.hyper.validate()?;
    let folds = kfold_split(data.len(), k, seed)?;
    let max_features = *grid.last().expect("non-empty");

    let prepared: Vec<Result<PreparedFold>> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let train = data.subset(&fold.train);
            let held = data.subset(&fold.validation);
            let space = Space::fit(extractor, &train.tokens, &held.tokens, max_features)
                .map_err(|(stage, e)| Error::Fold { fold: i, stage, source: Box::new(e) })?;
            Ok((space, train.labels, held.labels))
        })
        .collect();
    let prepared = prepared.into_iter().collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let results: Vec<Result<FoldResult>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (space, train_y, held_y) = &prepared[f];
            let start = Instant::now();
            let scored = score_point(space, grid[g], classifier, train_y, held_y)
                .map_err(|(stage, e)| Error::Fold { fold: f, stage, source: Box::new(e) })?;
            Ok(FoldResult {
                fold: f,
                train: scored.train,
                validation: scored.held_out,
                chosen_c: scored.chosen_c,
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect();

    let mut results = results.into_iter();
    let mut curve = Vec::with_capacity(grid.len());
    for &n_features in grid {
        let folds: Vec<FoldResult> = results.by_ref().take(k).collect::<Result<_>>()?;
        let train: Vec<Metrics> = folds.iter().map(|f| f.train).collect();
        let validation: Vec<Metrics> = folds.iter().map(|f| f.validation).collect();
        curve.push(CurvePoint {
            feature_count: n_features,
            report: CvReport {
                fingerprint: Fingerprint {
                    extractor: extractor.kind,
                    ngram_max: extractor.kind.ngram_max(),
                    n_features,
                    classifier: classifier.kind,
                    hyper: classifier.hyper,
                    seed,
                },
                train: Summary::of(&train),
                validation: Summary::of(&validation),
                folds,
            },
        });
    }
    Ok(curve)
}

/// Result of fitting on the full training set and scoring the test set once.
#[derive(Debug, Clone)]
pub struct TestRun {
    pub model: crate::classify::TrainedModel,
    pub train: Metrics,
    pub test: Metrics,
    pub chosen_c: Option<f64>,
    pub wall_seconds: f64,
}

pub fn evaluate_test(
    train: &Dataset,
    test: &Dataset,
    extractor: &ExtractorConfig,
    classifier: &ClassifierConfig,
    n_features: usize,
) -> Result<TestRun> {
    if n_features == 0 {
        return Err(Error::invalid("feature count must be positive"));
    }
    classifier.hyper.validate()?;
    let start = Instant::now();
    let space = Space::fit(extractor, &train.tokens, &test.tokens, n_features).map_err(|(_, e)| e)?;
    let scored = score_point(&space, n_features, classifier, &train.labels, &test.labels).map_err(|(_, e)| e)?;
    Ok(TestRun {
        model: scored.model,
        train: scored.train,
        test: scored.held_out,
        chosen_c: scored.chosen_c,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(v: u8) -> Star {
        Star::new(v).unwrap()
    }

    /// Each class has its own signature word among shared filler.
    fn signature_corpus(n: usize) -> Dataset {
        let words = ["awful", "poor", "okay", "good", "superb"];
        let mut d = Dataset::default();
        for i in 0..n {
            let c = i % 5;
            d.tokens.push(vec!["food".into(), words[c].into(), "place".into()]);
            d.labels.push(star(c as u8 + 1));
        }
        d
    }

    #[test]
    fn separable_corpus_is_learned_perfectly() {
        let data = signature_corpus(30);
        let clf = ClassifierConfig::new(ClassifierKind::LogReg, HyperParams { c: 100.0, ..Default::default() });
        let r = cross_validate(&data, &ExtractorConfig::new(ExtractorKind::Uni), &clf, 7, 3, 1).unwrap();
        assert_eq!(r.folds.len(), 3);
        assert_eq!(r.validation.accuracy_mean, 1.0);
        assert_eq!(r.validation.rmse_mean, 0.0);
    }

    #[test]
    fn single_point_curve_equals_cross_validate() {
        let data = signature_corpus(30);
        let ext = ExtractorConfig::new(ExtractorKind::UniBi);
        let clf = ClassifierConfig::new(ClassifierKind::NaiveBayes, HyperParams::default());
        let cv = cross_validate(&data, &ext, &clf, 5, 3, 4).unwrap();
        let curve = learning_curve(&data, &ext, &clf, &[5], 3, 4).unwrap();
        assert_eq!(curve.len(), 1);
        let strip = |mut r: CvReport| {
            r.folds.iter_mut().for_each(|f| f.wall_seconds = 0.0);
            r
        };
        assert_eq!(strip(curve[0].report.clone()), strip(cv));
    }

    #[test]
    fn stage_failures_name_the_fold() {
        let data = signature_corpus(30);
        let clf = ClassifierConfig::new(ClassifierKind::LogReg, HyperParams::default());
        let err = cross_validate(&data, &ExtractorConfig::new(ExtractorKind::Uni), &clf, 500, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 0, stage: Stage::Selection, .. }), "{err}");
        let nb = ClassifierConfig::new(ClassifierKind::NaiveBayes, HyperParams::default());
        let err = cross_validate(&data, &ExtractorConfig::new(ExtractorKind::Lsi), &nb, 3, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Fold { stage: Stage::Fit, .. }), "{err}");
    }

    #[test]
    fn grid_must_ascend() {
        let data = signature_corpus(30);
        let clf = ClassifierConfig::new(ClassifierKind::NaiveBayes, HyperParams::default());
        let ext = ExtractorConfig::new(ExtractorKind::Uni);
        assert!(learning_curve(&data, &ext, &clf, &[5, 5], 3, 0).is_err());
        assert!(learning_curve(&data, &ext, &clf, &[], 3, 0).is_err());
    }

    #[test]
    fn lsi_curve_and_test_run() {
        let data = signature_corpus(40);
        let ext = ExtractorConfig::new(ExtractorKind::Lsi);
        let clf = ClassifierConfig::new(ClassifierKind::LinearSvc, HyperParams::default());
        let curve = learning_curve(&data, &ext, &clf, &[2, 5], 3, 0).unwrap();
        assert_eq!(curve[1].report.validation.accuracy_mean, 1.0);
        let run = evaluate_test(&data, &data, &ext, &clf, 5).unwrap();
        assert_eq!(run.test.accuracy, 1.0);
    }

    #[test]
    fn c_grid_records_choice() {
        let data = signature_corpus(30);
        let mut clf = ClassifierConfig::new(ClassifierKind::LinearSvc, HyperParams::default());
        clf.c_grid = vec![0.01, 1.0];
        let r = cross_validate(&data, &ExtractorConfig::new(ExtractorKind::Uni), &clf, 7, 3, 0).unwrap();
        assert!(r.folds.iter().all(|f| f.chosen_c.is_some()));
    }
}
