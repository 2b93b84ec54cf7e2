//! Ingestion of Yelp-style JSON-lines dumps.
//!
//! Only `business_id`, `categories`, `review_id`, `stars` and `text` are
//! read; every other field is ignored. Parsing is lenient by default: a
//! malformed line is counted and skipped. With `strict` set the first bad
//! line aborts with its 1-based line number.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};

pub const DEFAULT_CATEGORY: &str = "Restaurants";

const CHUNK_LINES: usize = 1 << 14;

/// A star rating in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Star(u8);

impl Star {
    pub const ALL: [Star; 5] = [Star(1), Star(2), Star(3), Star(4), Star(5)];

    pub fn new(value: u8) -> Option<Star> {
        (1..=5).contains(&value).then_some(Star(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub(crate) fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl fmt::Display for Star {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Business {
    pub business_id: String,
    pub categories: Vec<String>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Review {
    pub review_id: String,
    pub business_id: String,
    pub stars: Star,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub strict: bool,
}

/// Parsed records plus counts of what was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    /// Lines that were not valid JSON or lacked a required field.
    pub malformed: usize,
    /// Well-formed records that violated an invariant (star range, duplicate id).
    pub rejected: usize,
}

impl<T> Parsed<T> {
    pub fn skipped(&self) -> usize {
        self.malformed + self.rejected
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Categories {
    List(Vec<String>),
    // Later dataset releases store a comma-separated string.
    Joined(String),
}

#[derive(Deserialize)]
struct RawBusiness {
    business_id: String,
    #[serde(default)]
    categories: Option<Categories>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
struct RawReview {
    #[serde(default)]
    review_id: Option<String>,
    business_id: String,
    stars: f64,
    text: String,
}

enum LineOutcome<T> {
    Blank,
    Record(T),
    Malformed(String),
    Rejected(String),
}

fn parse_business_line(line: &str) -> LineOutcome<Business> {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let raw: RawBusiness = match serde_json::from_str(line) {
        Ok(raw) => raw,
        Err(e) => return LineOutcome::Malformed(e.to_string()),
    };
    if raw.business_id.is_empty() {
        return LineOutcome::Malformed("empty business_id".into());
    }
    let categories = match raw.categories {
        None => Vec::new(),
        Some(Categories::List(list)) => list,
        Some(Categories::Joined(s)) => {
            s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect()
        }
    };
    LineOutcome::Record(Business { business_id: raw.business_id, categories, name: raw.name.unwrap_or_default() })
}

fn parse_review_line(line: &str) -> LineOutcome<Review> {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let raw: RawReview = match serde_json::from_str(line) {
        Ok(raw) => raw,
        Err(e) => return LineOutcome::Malformed(e.to_string()),
    };
    let stars = raw.stars;
    let star = if stars.fract() == 0.0 && (1.0..=5.0).contains(&stars) { Star::new(stars as u8) } else { None };
    match star {
        Some(stars) => LineOutcome::Record(Review {
            review_id: raw.review_id.unwrap_or_default(),
            business_id: raw.business_id,
            stars,
            text: raw.text,
        }),
        None => LineOutcome::Rejected(format!("stars {stars} outside 1..=5")),
    }
}

fn parse_lines<R, T, F>(input: R, opts: ParseOptions, parse: F) -> Result<Parsed<T>>
where
    R: BufRead,
    T: Send,
    F: Fn(&str) -> LineOutcome<T> + Sync,
{
    let mut out = Parsed { records: Vec::new(), malformed: 0, rejected: 0 };
    let mut lines = input.lines();
    let mut line_no = 0usize;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK_LINES);
        for line in lines.by_ref().take(CHUNK_LINES) {
            chunk.push(line?);
        }
        if chunk.is_empty() {
            break;
        }
        let parsed: Vec<LineOutcome<T>> = chunk.par_iter().map(|l| parse(l)).collect();
        for outcome in parsed {
            line_no += 1;
            match outcome {
                LineOutcome::Blank => {}
                LineOutcome::Record(r) => out.records.push(r),
                LineOutcome::Malformed(message) | LineOutcome::Rejected(message) if opts.strict => {
                    return Err(Error::Parse { line: line_no, message })
                }
                LineOutcome::Malformed(_) => out.malformed += 1,
                LineOutcome::Rejected(_) => out.rejected += 1,
            }
        }
    }
    Ok(out)
}

/// Parses a business JSON-lines stream. Duplicate ids after the first are rejected.
pub fn parse_businesses<R: BufRead>(input: R, opts: ParseOptions) -> Result<Parsed<Business>> {
    let mut parsed = parse_lines(input, opts, parse_business_line)?;
    let mut seen = HashSet::with_capacity(parsed.records.len());
    let before = parsed.records.len();
    let mut duplicate = None;
    parsed.records.retain(|b| {
        let fresh = seen.insert(b.business_id.clone());
        if !fresh && duplicate.is_none() {
            duplicate = Some(b.business_id.clone());
        }
        fresh
    });
    if let Some(id) = duplicate {
        if opts.strict {
            return Err(Error::invalid(format!("duplicate business_id {id:?}")));
        }
    }
    parsed.rejected += before - parsed.records.len();
    Ok(parsed)
}

pub fn parse_reviews<R: BufRead>(input: R, opts: ParseOptions) -> Result<Parsed<Review>> {
    parse_lines(input, opts, parse_review_line)
}

/// Result of joining reviews to businesses of one category.
#[derive(Debug, Clone, PartialEq)]
pub struct Join {
    pub reviews: Vec<Review>,
    /// Businesses carrying the category.
    pub matching_businesses: usize,
    /// Reviews whose business_id is not among the parsed businesses.
    pub unknown_business: usize,
}

/// Keeps reviews of businesses whose category list contains `category`
/// (exact, case-sensitive). Input order is preserved.
pub fn filter_reviews_by_category(businesses: &[Business], reviews: &[Review], category: &str) -> Join {
    let mut known: HashMap<&str, bool> = HashMap::with_capacity(businesses.len());
    for b in businesses {
        let hit = b.categories.iter().any(|c| c == category);
        known.insert(b.business_id.as_str(), hit);
    }
    let mut unknown_business = 0;
    let reviews = reviews
        .iter()
        .filter(|r| match known.get(r.business_id.as_str()) {
            Some(&hit) => hit,
            None => {
                unknown_business += 1;
                false
            }
        })
        .cloned()
        .collect();
    Join { reviews, matching_businesses: known.values().filter(|&&hit| hit).count(), unknown_business }
}

pub fn filter_restaurant_reviews(businesses: &[Business], reviews: &[Review]) -> Join {
    filter_reviews_by_category(businesses, reviews, DEFAULT_CATEGORY)
}

pub fn drop_empty_texts(reviews: Vec<Review>) -> Vec<Review> {
    reviews.into_iter().filter(|r| !r.text.trim().is_empty()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Cut each star class separately instead of the pooled corpus.
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(format!("train fraction {train_fraction} outside (0, 1)")));
        }
        Ok(SplitSpec { train_fraction, seed, stratified: false })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 0, stratified: false }
    }
}

/// Shuffle-then-cut split.
///
/// Indices are permuted with ChaCha8 seeded from `spec.seed` (Fisher-Yates),
/// the first `round(fraction * n)` go to train, and each side is returned in
/// original input order. In stratified mode the cut is applied per star class.
pub fn split_train_test(reviews: &[Review], spec: &SplitSpec) -> Result<(Vec<Review>, Vec<Review>)> {
    if reviews.is_empty() {
        return Err(Error::invalid("cannot split an empty review list"));
    }
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; reviews.len()];

    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class = vec![Vec::new(); 5];
        for (i, r) in reviews.iter().enumerate() {
            by_class[r.stars.index()].push(i);
        }
        by_class
    } else {
        vec![(0..reviews.len()).collect()]
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let cut = (spec.train_fraction * group.len() as f64).round() as usize;
        for &i in &group[..cut] {
            in_train[i] = true;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, &t) in reviews.iter().zip(&in_train) {
        if t {
            train.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }
    Ok((train, test))
}

/// Review counts per star.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; 5],
}

impl Histogram {
    pub fn count(&self, star: Star) -> u64 {
        self.counts[star.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of reviews rated `min` stars or more; 0 for an empty histogram.
    pub fn fraction_at_least(&self, min: Star) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hi: u64 = self.counts[min.index()..].iter().sum();
        hi as f64 / total as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stars,count\n");
        for star in Star::ALL {
            out.push_str(&format!("{},{}\n", star, self.count(star)));
        }
        out
    }
}

pub fn class_histogram(reviews: &[Review]) -> Histogram {
    let mut h = Histogram::default();
    for r in reviews {
        h.counts[r.stars.index()] += 1;
    }
    h
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"RFRV";
const SNAPSHOT_VERSION: u32 = 1;

/// Columnar review snapshot, version 1:
///
/// ```text
/// magic "RFRV" | u32 version | u64 n
/// n × (u64 len, utf-8 bytes)   review_id
/// n × (u64 len, utf-8 bytes)   business_id
/// n × u8                       stars
/// n × (u64 len, utf-8 bytes)   text
/// ```
pub fn encode_reviews(reviews: &[Review]) -> Vec<u8> {
    let mut enc = Encoder::new(SNAPSHOT_MAGIC, SNAPSHOT_VERSION);
    enc.usize(reviews.len());
    for r in reviews {
        enc.str(&r.review_id);
    }
    for r in reviews {
        enc.str(&r.business_id);
    }
    for r in reviews {
        enc.u8(r.stars.value());
    }
    for r in reviews {
        enc.str(&r.text);
    }
    enc.finish()
}

pub fn decode_reviews(bytes: &[u8]) -> Result<Vec<Review>> {
    let mut dec = Decoder::open("review snapshot", bytes, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
    // Smallest record: three empty strings plus one star byte.
    let n = dec.count(25)?;
    let review_ids = (0..n).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
    let business_ids = (0..n).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
    let mut stars = Vec::with_capacity(n);
    for _ in 0..n {
        let v = dec.u8()?;
        stars.push(Star::new(v).ok_or_else(|| dec.err(format!("star value {v}")))?);
    }
    let texts = (0..n).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
    dec.finish()?;
    Ok(review_ids
        .into_iter()
        .zip(business_ids)
        .zip(stars)
        .zip(texts)
        .map(|(((review_id, business_id), stars), text)| Review { review_id, business_id, stars, text })
        .collect())
}
