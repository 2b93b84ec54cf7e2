//! The `rating-forge` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal or
//! convergence error.

mod svg;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tempfile::NamedTempFile;

use crate::classify::{ClassifierKind, HyperParams, LogRegMode};
use crate::corpus::{
    class_histogram, decode_reviews, drop_empty_texts, encode_reviews, filter_reviews_by_category, parse_businesses,
    parse_reviews, split_train_test, ParseOptions, Review, SplitSpec, DEFAULT_CATEGORY,
};
use crate::error::{Error, Result};
use crate::evaluate::{
    cross_validate, curve_rows, cv_rows, default_grid, evaluate_test, learning_curve, parse_report, test_rows,
    write_report, ClassifierConfig, Dataset, ExtractorConfig, ExtractorKind, FoldTag, LsiInput, ReportRow,
};
use crate::lsi::{fit_lsi, profile_csv, singular_value_profile, SvdOptions};
use crate::preprocess::{NormalizeOptions, Preprocessor, StopwordList};
use crate::synthetic::{self, SyntheticSpec};
use crate::vectorize::{
    build_vocabulary, count_matrix, fit_tfidf, rank_features, transform_tfidf, NgramSpec, RankBy, Selection,
};

pub use svg::{Chart, Series};

#[derive(Debug, Parser)]
#[command(name = "rating-forge", version, about = "Predict review star ratings from review text")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Join business and review JSON lines, split train/test, write snapshots and a star histogram.
    Ingest(IngestArgs),
    /// Write the token sequence of every review in a snapshot.
    Preprocess(PreprocessArgs),
    /// Build an n-gram vocabulary and TF-IDF matrix from a snapshot.
    Vectorize(VectorizeArgs),
    /// Singular-value profile of the unigram matrix, for choosing the topic count.
    LsiProfile(LsiProfileArgs),
    /// k-fold cross-validation at one feature count.
    Cv(CvArgs),
    /// Learning curve over a feature-count grid, with RMSE and accuracy plots.
    Curve(CurveArgs),
    /// Fit on the full training set and score the test set once.
    TestEval(TestEvalArgs),
    /// Plot a report CSV as an SVG line chart.
    Plot(PlotArgs),
    /// Print the stopword list in use.
    Stopwords(StopwordArgs),
    /// Write a synthetic business/review corpus as JSON lines.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "reviews"]))]
struct SourceArgs {
    /// Review snapshot written by `ingest` (used as the training set).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Review JSON lines; joined with --business and split with --train-fraction.
    #[arg(long)]
    reviews: Option<PathBuf>,
    /// Business JSON lines used to keep only reviews of --category.
    #[arg(long, requires = "reviews")]
    business: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_CATEGORY)]
    category: String,
    /// Fail on the first malformed or rejected record instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Drop reviews whose text is empty.
    #[arg(long)]
    drop_empty: bool,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Split each star class separately.
    #[arg(long)]
    stratified: bool,
}

#[derive(Debug, Args)]
struct TextArgs {
    /// Stopword file, one word per line (`#` comments allowed).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Keep stopwords.
    #[arg(long, conflicts_with = "stopwords")]
    no_stopwords: bool,
    /// Remove digits during normalization.
    #[arg(long)]
    strip_digits: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankArg {
    Max,
    Mean,
}

#[derive(Debug, Args)]
struct FeatureArgs {
    #[arg(long, default_value = "uni", value_parser = parse_extractor)]
    extractor: ExtractorKind,
    /// Statistic used to rank TF-IDF features for top-k selection.
    #[arg(long, value_enum, default_value = "max")]
    rank_by: RankArg,
    /// Factorize raw counts instead of TF-IDF for LSI.
    #[arg(long)]
    lsi_counts: bool,
    /// Fit vocabulary, IDF and LSI on training and held-out documents together (leaks).
    #[arg(long)]
    paper_faithful: bool,
    /// Topic count for LSI (upper bound of the curve grid).
    #[arg(long, default_value_t = 200)]
    topics: usize,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "logreg", value_parser = parse_classifier)]
    classifier: ClassifierKind,
    /// Inverse regularization strength (logreg, linsvc).
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Choose C per training set by internal 3-fold CV over these values.
    #[arg(long, value_delimiter = ',')]
    c_grid: Vec<f64>,
    /// Naive Bayes smoothing.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Perceptron epochs.
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Iteration cap for logreg and linsvc.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// One-vs-rest logistic regression instead of softmax.
    #[arg(long)]
    ovr: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Record wall-clock seconds in reports (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    reviews: PathBuf,
    #[arg(long)]
    business: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_CATEGORY)]
    category: String,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    drop_empty: bool,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long)]
    stratified: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    /// Review snapshot.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    text: TextArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VectorizeArgs {
    /// Review snapshot.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "uni", value_parser = parse_extractor)]
    extractor: ExtractorKind,
    /// Keep only the top N features.
    #[arg(long)]
    features: Option<usize>,
    #[arg(long, value_enum, default_value = "max")]
    rank_by: RankArg,
    /// Also write an exact text dump of the matrix.
    #[arg(long)]
    dump: bool,
    #[command(flatten)]
    text: TextArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LsiProfileArgs {
    /// Review snapshot.
    #[arg(long)]
    input: PathBuf,
    /// Number of singular values to compute.
    #[arg(long, default_value_t = 200)]
    topics: usize,
    #[arg(long)]
    lsi_counts: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    text: TextArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Feature count for n-gram extractors (LSI uses --topics).
    #[arg(long = "features", default_value_t = 10_000)]
    n_features: usize,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Ascending feature counts (topic counts for LSI).
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
}

#[derive(Debug, Args)]
struct TestEvalArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Test snapshot, when --input is used.
    #[arg(long, requires = "input")]
    test: Option<PathBuf>,
    #[command(flatten)]
    text: TextArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long = "features", default_value_t = 10_000)]
    n_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Rmse,
    Accuracy,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Report CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "rmse")]
    metric: Metric,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StopwordArgs {
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_extractor(s: &str) -> std::result::Result<ExtractorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(Error::Io(e))
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return 1;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 3;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Vectorize(a) => vectorize(a),
        Command::LsiProfile(a) => lsi_profile(a),
        Command::Cv(a) => cv(a),
        Command::Curve(a) => curve(a),
        Command::TestEval(a) => test_eval(a),
        Command::Plot(a) => plot(a),
        Command::Stopwords(a) => stopwords(a),
        Command::Synth(a) => synth(a),
    }
}

/// Writes through a temporary file and renames it into place. The scratch
/// file goes to `RATING_FORGE_TMP` when set; if the rename crosses devices
/// the bytes are staged again next to the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let scratch = std::env::var_os("RATING_FORGE_TMP").map(PathBuf::from);
    let mut tmp = NamedTempFile::new_in(scratch.as_deref().unwrap_or(dir))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    if tmp.persist(path).is_err() {
        let mut local = NamedTempFile::new_in(dir)?;
        local.write_all(bytes)?;
        local.as_file().sync_all()?;
        local.persist(path).map_err(|e| Error::Io(e.error))?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_snapshot(path: &Path) -> Result<Vec<Review>> {
    let bytes =
        fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    decode_reviews(&bytes)
}

struct Joined {
    reviews: Vec<Review>,
    summary: String,
}

fn join(reviews: &Path, business: Option<&Path>, category: &str, strict: bool, drop_empty: bool) -> Result<Joined> {
    let opts = ParseOptions { strict };
    let parsed = parse_reviews(open(reviews)?, opts)?;
    let mut summary = format!("{} reviews parsed ({} skipped)", parsed.records.len(), parsed.skipped());
    let mut kept = match business {
        Some(path) => {
            let b = parse_businesses(open(path)?, opts)?;
            let j = filter_reviews_by_category(&b.records, &parsed.records, category);
            summary = format!(
                "{} businesses ({} skipped), {} in {category:?}; {summary}; {} joined, {} with unknown business",
                b.records.len(),
                b.skipped(),
                j.matching_businesses,
                j.reviews.len(),
                j.unknown_business
            );
            j.reviews
        }
        None => parsed.records,
    };
    if drop_empty {
        let before = kept.len();
        kept = drop_empty_texts(kept);
        summary.push_str(&format!(", {} empty dropped", before - kept.len()));
    }
    Ok(Joined { reviews: kept, summary })
}

fn split_spec(fraction: f64, seed: u64, stratified: bool) -> Result<SplitSpec> {
    let mut spec = SplitSpec::new(fraction, seed)?;
    spec.stratified = stratified;
    Ok(spec)
}

/// Training and (possibly empty) test reviews for the evaluation commands.
fn load(src: &SourceArgs, test: Option<&Path>, seed: u64) -> Result<(Vec<Review>, Vec<Review>)> {
    if let Some(input) = &src.input {
        let mut train = read_snapshot(input)?;
        if src.drop_empty {
            train = drop_empty_texts(train);
        }
        let test = match test {
            Some(t) => read_snapshot(t)?,
            None => Vec::new(),
        };
        println!("load: {} training reviews from {}", train.len(), input.display());
        return Ok((train, test));
    }
    let reviews = src.reviews.as_deref().expect("clap enforces a source");
    let joined = join(reviews, src.business.as_deref(), &src.category, src.strict, src.drop_empty)?;
    let (train, test) = split_train_test(&joined.reviews, &split_spec(src.train_fraction, seed, src.stratified)?)?;
    println!("load: {}; train {} / test {}", joined.summary, train.len(), test.len());
    Ok((train, test))
}

fn preprocessor(t: &TextArgs) -> Result<Preprocessor> {
    let stopwords = match (&t.stopwords, t.no_stopwords) {
        (Some(path), _) => StopwordList::parse(format!("file:{}", path.display()), open(path)?)?,
        (None, true) => StopwordList::empty(),
        (None, false) => StopwordList::english(),
    };
    Ok(Preprocessor { stopwords, options: NormalizeOptions { strip_digits: t.strip_digits } })
}

fn rank_by(r: RankArg) -> RankBy {
    match r {
        RankArg::Max => RankBy::Max,
        RankArg::Mean => RankBy::Mean,
    }
}

fn extractor_config(f: &FeatureArgs, seed: u64) -> ExtractorConfig {
    ExtractorConfig {
        kind: f.extractor,
        rank_by: rank_by(f.rank_by),
        lsi_input: if f.lsi_counts { LsiInput::Counts } else { LsiInput::TfIdf },
        svd: SvdOptions { seed, ..SvdOptions::default() },
        paper_faithful: f.paper_faithful,
    }
}

fn classifier_config(m: &ModelArgs, seed: u64) -> Result<ClassifierConfig> {
    let hyper = HyperParams {
        c: m.c,
        tol: m.tol,
        epochs: m.epochs,
        alpha: m.alpha,
        seed,
        max_iter: m.max_iter,
        logreg_mode: if m.ovr { LogRegMode::OneVsRest } else { LogRegMode::Multinomial },
    };
    hyper.validate()?;
    Ok(ClassifierConfig { kind: m.classifier, hyper, c_grid: m.c_grid.clone() })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    source: serde_json::Value,
    n_train: usize,
    n_test: usize,
    stopwords: &'a str,
    strip_digits: bool,
    extractor: &'a ExtractorConfig,
    rank_by: &'static str,
    classifier: &'a ClassifierConfig,
    grid: &'a [usize],
    k: usize,
    seed: u64,
}

fn source_json(src: &SourceArgs) -> serde_json::Value {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    json!({
        "input": path(&src.input),
        "reviews": path(&src.reviews),
        "business": path(&src.business),
        "category": src.category,
        "strict": src.strict,
        "drop_empty": src.drop_empty,
        "train_fraction": src.train_fraction,
        "stratified": src.stratified,
    })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn ingest(a: IngestArgs) -> Outcome {
    let joined = join(&a.reviews, a.business.as_deref(), &a.category, a.strict, a.drop_empty)?;
    if joined.reviews.is_empty() {
        return Err(Error::invalid("no reviews left after the join").into());
    }
    let (train, test) = split_train_test(&joined.reviews, &split_spec(a.train_fraction, a.seed, a.stratified)?)?;
    write_atomic(&a.out.join("reviews.rfrv"), &encode_reviews(&joined.reviews))?;
    write_atomic(&a.out.join("train.rfrv"), &encode_reviews(&train))?;
    write_atomic(&a.out.join("test.rfrv"), &encode_reviews(&test))?;
    let hist = class_histogram(&joined.reviews);
    write_atomic(&a.out.join("histogram.csv"), hist.to_csv().as_bytes())?;
    println!("ingest: {}; train {} / test {}", joined.summary, train.len(), test.len());
    Ok(())
}

fn preprocess(a: PreprocessArgs) -> Outcome {
    let reviews = read_snapshot(&a.input)?;
    let pre = preprocessor(&a.text)?;
    let texts: Vec<&str> = reviews.iter().map(|r| r.text.as_str()).collect();
    let tokens = pre.tokens_all(&texts);
    let mut out = String::from("stars\ttokens\n");
    let mut total = 0;
    for (r, t) in reviews.iter().zip(&tokens) {
        total += t.len();
        out.push_str(&format!("{}\t{}\n", r.stars, t.join(" ")));
    }
    write_atomic(&a.out.join("tokens.tsv"), out.as_bytes())?;
    println!(
        "preprocess: {} reviews, {total} tokens, stopwords {} ({} words)",
        reviews.len(),
        pre.stopwords.tag(),
        pre.stopwords.len()
    );
    Ok(())
}

fn vectorize(a: VectorizeArgs) -> Outcome {
    if a.extractor == ExtractorKind::Lsi {
        return Err(Failure::Usage("vectorize builds n-gram matrices; use lsi-profile for LSI".into()));
    }
    let reviews = read_snapshot(&a.input)?;
    let pre = preprocessor(&a.text)?;
    let data = Dataset::from_reviews(&reviews, &pre);
    let vocab = build_vocabulary(&data.tokens, NgramSpec::new(a.extractor.ngram_max())?)?;
    let counts = count_matrix(&data.tokens, &vocab);
    let weighted = transform_tfidf(&counts, &fit_tfidf(&counts, &vocab)?)?;
    let matrix = match a.features {
        Some(k) => Selection::top_k(&rank_features(&weighted, rank_by(a.rank_by)), k)?.apply(&weighted),
        None => weighted,
    };
    write_atomic(&a.out.join("vocab.tsv"), vocab.to_tsv().as_bytes())?;
    write_atomic(&a.out.join("matrix.rfsm"), &matrix.encode())?;
    if a.dump {
        write_atomic(&a.out.join("matrix.txt"), matrix.debug_dump().as_bytes())?;
    }
    println!(
        "vectorize: {} documents, vocabulary {} ({}), matrix {}x{} with {} non-zeros",
        matrix.n_rows(),
        vocab.len(),
        a.extractor,
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.nnz()
    );
    Ok(())
}

fn lsi_profile(a: LsiProfileArgs) -> Outcome {
    let reviews = read_snapshot(&a.input)?;
    let data = Dataset::from_reviews(&reviews, &preprocessor(&a.text)?);
    let vocab = build_vocabulary(&data.tokens, NgramSpec::UNIGRAMS)?;
    let counts = count_matrix(&data.tokens, &vocab);
    let m = if a.lsi_counts { counts } else { transform_tfidf(&counts, &fit_tfidf(&counts, &vocab)?)? };
    let opts = SvdOptions { seed: a.seed, ..SvdOptions::default() };
    let sigma = singular_value_profile(&m, a.topics, &opts)?;
    write_atomic(&a.out.join("profile.csv"), profile_csv(&sigma).as_bytes())?;
    let chart = Chart {
        title: "Singular value profile".into(),
        x_label: "rank".into(),
        y_label: "sigma".into(),
        log_x: false,
        series: vec![Series {
            label: "sigma".into(),
            points: sigma.iter().enumerate().map(|(i, &s)| ((i + 1) as f64, s)).collect(),
        }],
    };
    write_atomic(&a.out.join("profile.svg"), chart.render().as_bytes())?;
    let (model, _) = fit_lsi(&m, a.topics, &opts)?;
    write_atomic(&a.out.join("lsi.rfls"), &model.encode())?;
    println!(
        "lsi-profile: {}x{} matrix, {} singular values, sigma_1 {:.6}, sigma_{} {:.6}",
        m.n_rows(),
        m.n_cols(),
        sigma.len(),
        sigma[0],
        sigma.len(),
        sigma[sigma.len() - 1]
    );
    Ok(())
}

fn feature_count(f: &FeatureArgs, n_features: usize) -> usize {
    if f.extractor == ExtractorKind::Lsi {
        f.topics
    } else {
        n_features
    }
}

fn cv(a: CvArgs) -> Outcome {
    let (train, _) = load(&a.source, None, a.run.seed)?;
    let pre = preprocessor(&a.text)?;
    let data = Dataset::from_reviews(&train, &pre);
    let ext = extractor_config(&a.features, a.run.seed);
    let clf = classifier_config(&a.model, a.run.seed)?;
    let n = feature_count(&a.features, a.n_features);
    let report = cross_validate(&data, &ext, &clf, n, a.run.k, a.run.seed)?;
    write_atomic(&a.run.out.join("report.csv"), write_report(&cv_rows(&report, a.run.timings)).as_bytes())?;
    let manifest = Manifest {
        tool: "rating-forge",
        version: env!("CARGO_PKG_VERSION"),
        command: "cv",
        source: source_json(&a.source),
        n_train: data.len(),
        n_test: 0,
        stopwords: pre.stopwords.tag(),
        strip_digits: a.text.strip_digits,
        extractor: &ext,
        rank_by: rank_name(a.features.rank_by),
        classifier: &clf,
        grid: &[n],
        k: a.run.k,
        seed: a.run.seed,
    };
    write_atomic(&a.run.out.join("manifest.json"), &to_json(&manifest))?;
    println!(
        "cv: {} {} n={n} k={}: val rmse {:.4} accuracy {:.4}, train rmse {:.4} accuracy {:.4}",
        ext.kind,
        clf.kind,
        a.run.k,
        report.validation.rmse_mean,
        report.validation.accuracy_mean,
        report.train.rmse_mean,
        report.train.accuracy_mean
    );
    Ok(())
}

fn rank_name(r: RankArg) -> &'static str {
    match r {
        RankArg::Max => "max",
        RankArg::Mean => "mean",
    }
}

fn curve(a: CurveArgs) -> Outcome {
    let grid = if !a.grid.is_empty() {
        a.grid.clone()
    } else if a.features.extractor == ExtractorKind::Lsi {
        default_grid().into_iter().filter(|&g| g <= a.features.topics).collect()
    } else {
        default_grid()
    };
    let (train, _) = load(&a.source, None, a.run.seed)?;
    let pre = preprocessor(&a.text)?;
    let data = Dataset::from_reviews(&train, &pre);
    let ext = extractor_config(&a.features, a.run.seed);
    let clf = classifier_config(&a.model, a.run.seed)?;
    let points = learning_curve(&data, &ext, &clf, &grid, a.run.k, a.run.seed)?;
    let rows = curve_rows(&points, a.run.timings);
    write_atomic(&a.run.out.join("report.csv"), write_report(&rows).as_bytes())?;
    for metric in [Metric::Rmse, Metric::Accuracy] {
        let svg = report_chart(&rows, metric)?.render();
        write_atomic(&a.run.out.join(format!("{}.svg", metric_name(metric))), svg.as_bytes())?;
    }
    let manifest = Manifest {
        tool: "rating-forge",
        version: env!("CARGO_PKG_VERSION"),
        command: "curve",
        source: source_json(&a.source),
        n_train: data.len(),
        n_test: 0,
        stopwords: pre.stopwords.tag(),
        strip_digits: a.text.strip_digits,
        extractor: &ext,
        rank_by: rank_name(a.features.rank_by),
        classifier: &clf,
        grid: &grid,
        k: a.run.k,
        seed: a.run.seed,
    };
    write_atomic(&a.run.out.join("manifest.json"), &to_json(&manifest))?;
    let best = points
        .iter()
        .max_by(|x, y| {
            x.report
                .validation
                .accuracy_mean
                .total_cmp(&y.report.validation.accuracy_mean)
                .then(y.feature_count.cmp(&x.feature_count))
        })
        .expect("non-empty grid");
    println!(
        "curve: {} {} over {} grid points; best val accuracy {:.4} (rmse {:.4}) at {} features",
        ext.kind,
        clf.kind,
        grid.len(),
        best.report.validation.accuracy_mean,
        best.report.validation.rmse_mean,
        best.feature_count
    );
    Ok(())
}

fn test_eval(a: TestEvalArgs) -> Outcome {
    let (train, test) = load(&a.source, a.test.as_deref(), a.run.seed)?;
    if test.is_empty() {
        return Err(Failure::Usage("test-eval needs a test set: pass --test with --input, or --reviews".into()));
    }
    let pre = preprocessor(&a.text)?;
    let train_data = Dataset::from_reviews(&train, &pre);
    let test_data = Dataset::from_reviews(&test, &pre);
    let ext = extractor_config(&a.features, a.run.seed);
    let clf = classifier_config(&a.model, a.run.seed)?;
    let n = feature_count(&a.features, a.n_features);
    let start = Instant::now();
    let run = evaluate_test(&train_data, &test_data, &ext, &clf, n)?;
    let seconds = start.elapsed().as_secs_f64();
    let rows = test_rows(&run, ext.kind, n, a.run.seed, a.run.timings);
    write_atomic(&a.run.out.join("report.csv"), write_report(&rows).as_bytes())?;
    write_atomic(&a.run.out.join("model.rfmd"), &run.model.encode())?;
    let sidecar = json!({
        "kind": run.model.kind(),
        "classes": run.model.classes().iter().map(|s| s.value()).collect::<Vec<_>>(),
        "n_features": run.model.n_features(),
        "extractor": ext.kind,
        "hyper": run.model.hyper(),
        "chosen_c": run.chosen_c,
        "diagnostics": run.model.diagnostics(),
        "training_seconds": if a.run.timings { Some(seconds) } else { None },
    });
    write_atomic(&a.run.out.join("model.json"), &to_json(&sidecar))?;
    let manifest = Manifest {
        tool: "rating-forge",
        version: env!("CARGO_PKG_VERSION"),
        command: "test-eval",
        source: source_json(&a.source),
        n_train: train_data.len(),
        n_test: test_data.len(),
        stopwords: pre.stopwords.tag(),
        strip_digits: a.text.strip_digits,
        extractor: &ext,
        rank_by: rank_name(a.features.rank_by),
        classifier: &clf,
        grid: &[n],
        k: a.run.k,
        seed: a.run.seed,
    };
    write_atomic(&a.run.out.join("manifest.json"), &to_json(&manifest))?;
    println!(
        "test-eval: {} {} n={n}: test rmse {:.4} accuracy {:.4} ({} reviews), train rmse {:.4} accuracy {:.4}",
        ext.kind, clf.kind, run.test.rmse, run.test.accuracy, run.test.n, run.train.rmse, run.train.accuracy
    );
    Ok(())
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Rmse => "rmse",
        Metric::Accuracy => "accuracy",
    }
}

/// One series per (extractor, classifier, split), using the aggregate rows
/// (`mean` or `full`) when the report has any.
fn report_chart(rows: &[ReportRow], metric: Metric) -> Result<Chart> {
    if rows.is_empty() {
        return Err(Error::Parse { line: 2, message: "report has no data rows".into() });
    }
    let aggregate: Vec<&ReportRow> = rows.iter().filter(|r| matches!(r.fold, FoldTag::Mean | FoldTag::Full)).collect();
    let chosen: Vec<&ReportRow> = if aggregate.is_empty() { rows.iter().collect() } else { aggregate };
    let multi_extractor = chosen.iter().any(|r| r.extractor != chosen[0].extractor);
    let mut series: Vec<((ExtractorKind, ClassifierKind, String), Series)> = Vec::new();
    for r in chosen.iter().copied() {
        let key = (r.extractor, r.classifier, r.split.to_string());
        let y = match metric {
            Metric::Rmse => r.rmse,
            Metric::Accuracy => r.accuracy,
        };
        let point = (r.n_features as f64, y);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, s)) => s.points.push(point),
            None => {
                let label = if multi_extractor {
                    format!("{} {} {}", r.extractor, r.classifier, r.split)
                } else {
                    format!("{} {}", r.classifier, r.split)
                };
                series.push((key, Series { label, points: vec![point] }));
            }
        }
    }
    let mut series: Vec<Series> = series.into_iter().map(|(_, s)| s).collect();
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let topics = chosen.iter().all(|r| r.extractor == ExtractorKind::Lsi);
    Ok(Chart {
        title: format!(
            "{} vs {}",
            match metric {
                Metric::Rmse => "RMSE",
                Metric::Accuracy => "Accuracy",
            },
            if topics { "topic count" } else { "feature count" }
        ),
        x_label: if topics { "topics (log scale)" } else { "features (log scale)" }.into(),
        y_label: metric_name(metric).into(),
        log_x: true,
        series,
    })
}

fn plot(a: PlotArgs) -> Outcome {
    let rows = parse_report(open(&a.input)?)?;
    let svg = report_chart(&rows, a.metric)?.render();
    write_atomic(&a.out, svg.as_bytes())?;
    println!("plot: {} rows from {} -> {}", rows.len(), a.input.display(), a.out.display());
    Ok(())
}

fn stopwords(a: StopwordArgs) -> Outcome {
    let list = match &a.stopwords {
        Some(path) => StopwordList::parse(format!("file:{}", path.display()), open(path)?)?,
        None => StopwordList::english(),
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "# {} ({} words)", list.tag(), list.len())?;
    for w in list.sorted() {
        writeln!(out, "{w}")?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Outcome {
    let reviews = synthetic::generate(&SyntheticSpec { n_reviews: a.n, seed: a.seed, ..SyntheticSpec::default() });
    let mut business = String::new();
    for b in synthetic::businesses() {
        let line = json!({"business_id": b.business_id, "name": b.name, "categories": b.categories});
        business.push_str(&line.to_string());
        business.push('\n');
    }
    let mut review = String::new();
    for (i, r) in reviews.iter().enumerate() {
        // a few shop reviews exercise the category join
        let business_id = if i % 25 == 24 { "shop" } else { r.business_id.as_str() };
        let line =
            json!({"review_id": r.review_id, "business_id": business_id, "stars": r.stars.value(), "text": r.text});
        review.push_str(&line.to_string());
        review.push('\n');
    }
    write_atomic(&a.out.join("business.json"), business.as_bytes())?;
    write_atomic(&a.out.join("review.json"), review.as_bytes())?;
    println!("synth: {} reviews, {} businesses", reviews.len(), synthetic::businesses().len());
    Ok(())
}
