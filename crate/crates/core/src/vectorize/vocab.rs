use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{SparseMatrix, Weighting};
use crate::preprocess::TokenSeq;

/// N-gram orders `1..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NgramSpec {
    n_max: u8,
}

impl NgramSpec {
    pub const UNIGRAMS: NgramSpec = NgramSpec { n_max: 1 };
    pub const BIGRAMS: NgramSpec = NgramSpec { n_max: 2 };
    pub const TRIGRAMS: NgramSpec = NgramSpec { n_max: 3 };

    pub fn new(n_max: u8) -> Result<Self> {
        if !(1..=3).contains(&n_max) {
            return Err(Error::invalid(format!("n-gram order {n_max} outside 1..=3")));
        }
        Ok(NgramSpec { n_max })
    }

    pub fn n_max(self) -> u8 {
        self.n_max
    }
}

/// Token ids of one n-gram; only the first `len` slots are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Ngram {
    ids: [u32; 3],
    len: u8,
}

impl Ngram {
    fn as_slice(&self) -> &[u32] {
        &self.ids[..usize::from(self.len)]
    }
}

// Token ids are assigned in sorted string order, so comparing id slices
// orders n-grams lexicographically by their tokens (a prefix sorts first).
impl Ord for Ngram {
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_slice().cmp(other.as_slice())
    }
}

impl PartialOrd for Ngram {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Calls `f` for every n-gram of orders `1..=n_max` in `ids`, skipping any
/// window that contains an unknown token.
fn for_each_ngram(ids: &[Option<u32>], n_max: u8, mut f: impl FnMut(Ngram)) {
    for n in 1..=usize::from(n_max) {
        for window in ids.windows(n) {
            let mut key = Ngram { ids: [0; 3], len: n as u8 };
            let mut known = true;
            for (slot, id) in key.ids.iter_mut().zip(window) {
                match id {
                    Some(id) => *slot = *id,
                    None => {
                        known = false;
                        break;
                    }
                }
            }
            if known {
                f(key);
            }
        }
    }
}

/// Bijection between n-grams and feature ids `0..len`, with document
/// frequencies from the fitting corpus.
///
/// Feature ids follow the lexicographic order of the n-gram's token
/// sequence, e.g. `a < a b < ab < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    spec: NgramSpec,
    tokens: Vec<String>,
    token_ids: HashMap<String, u32>,
    ngrams: Vec<Ngram>,
    index: HashMap<Ngram, usize>,
    doc_freq: Vec<u64>,
    n_docs: u64,
}

impl Vocabulary {
    fn from_counts(spec: NgramSpec, tokens: Vec<String>, df: HashMap<Ngram, u64>, n_docs: u64) -> Self {
        let token_ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let mut entries: Vec<(Ngram, u64)> = df.into_iter().collect();
        entries.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let index = entries.iter().enumerate().map(|(i, (g, _))| (*g, i)).collect();
        let (ngrams, doc_freq) = entries.into_iter().unzip();
        Vocabulary { spec, tokens, token_ids, ngrams, index, doc_freq, n_docs }
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn spec(&self) -> NgramSpec {
        self.spec
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn doc_freq(&self, feature: usize) -> u64 {
        self.doc_freq[feature]
    }

    pub fn doc_freqs(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn feature_id(&self, ngram: &[&str]) -> Option<usize> {
        if ngram.is_empty() || ngram.len() > usize::from(self.spec.n_max) {
            return None;
        }
        let mut key = Ngram { ids: [0; 3], len: ngram.len() as u8 };
        for (slot, tok) in key.ids.iter_mut().zip(ngram) {
            *slot = *self.token_ids.get(*tok)?;
        }
        self.index.get(&key).copied()
    }

    pub fn ngram(&self, feature: usize) -> Vec<&str> {
        self.ngrams[feature].as_slice().iter().map(|&id| self.tokens[id as usize].as_str()).collect()
    }

    pub fn ngram_string(&self, feature: usize) -> String {
        self.ngram(feature).join(" ")
    }

    fn token_id_seq(&self, doc: &[String]) -> Vec<Option<u32>> {
        doc.iter().map(|t| self.token_ids.get(t).copied()).collect()
    }

    /// Feature ids of every in-vocabulary n-gram occurrence in `doc`.
    pub fn feature_ids(&self, doc: &[String]) -> Vec<usize> {
        let ids = self.token_id_seq(doc);
        let mut out = Vec::new();
        for_each_ngram(&ids, self.spec.n_max, |g| {
            if let Some(&f) = self.index.get(&g) {
                out.push(f);
            }
        });
        out
    }

    /// Tab-separated export: a `# vocabulary` line carrying the format
    /// version, `n_docs` and `n_max`, a column header, then one
    /// `ngram<TAB>feature_id<TAB>doc_freq` line per feature in id order.
    pub fn to_tsv(&self) -> String {
        let mut out =
            format!("# vocabulary v1 n_docs={} n_max={}\nngram\tfeature_id\tdoc_freq\n", self.n_docs, self.spec.n_max);
        for f in 0..self.len() {
            out.push_str(&format!("{}\t{}\t{}\n", self.ngram_string(f), f, self.doc_freq[f]));
        }
        out
    }

    pub fn from_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let bad = |line: usize, message: String| Error::Parse { line: line + 1, message };

        let (_, first) = lines.next().ok_or_else(|| bad(0, "empty vocabulary file".into()))?;
        let first = first?;
        let mut n_docs = None;
        let mut n_max = None;
        let mut fields = first.split_whitespace();
        if (fields.next(), fields.next(), fields.next()) != (Some("#"), Some("vocabulary"), Some("v1")) {
            return Err(bad(0, format!("unrecognised header {first:?}")));
        }
        for field in fields {
            match field.split_once('=') {
                Some(("n_docs", v)) => n_docs = v.parse::<u64>().ok(),
                Some(("n_max", v)) => n_max = v.parse::<u8>().ok(),
                _ => return Err(bad(0, format!("unknown header field {field:?}"))),
            }
        }
        let n_docs = n_docs.ok_or_else(|| bad(0, "missing n_docs".into()))?;
        let spec =
            NgramSpec::new(n_max.ok_or_else(|| bad(0, "missing n_max".into()))?).map_err(|e| bad(0, e.to_string()))?;

        match lines.next() {
            Some((_, Ok(h))) if h == "ngram\tfeature_id\tdoc_freq" => {}
            Some((i, Ok(h))) => return Err(bad(i, format!("unexpected column header {h:?}"))),
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(bad(1, "missing column header".into())),
        }

        let mut rows: Vec<(Vec<String>, usize, u64)> = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let mut parts = line.split('\t');
            let (Some(gram), Some(id), Some(df), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(i, "expected three tab-separated fields".into()));
            };
            let words: Vec<String> = gram.split(' ').map(String::from).collect();
            if words.is_empty()
                || words.len() > usize::from(spec.n_max)
                || words.iter().any(|w| w.is_empty() || w.chars().any(char::is_whitespace))
            {
                return Err(bad(i, format!("bad n-gram {gram:?}")));
            }
            let id: usize = id.parse().map_err(|_| bad(i, format!("bad feature id {id:?}")))?;
            let df: u64 = df.parse().map_err(|_| bad(i, format!("bad doc_freq {df:?}")))?;
            if df == 0 || df > n_docs {
                return Err(bad(i, format!("doc_freq {df} outside [1, {n_docs}]")));
            }
            rows.push((words, id, df));
        }

        let n = rows.len();
        let mut seen = vec![false; n];
        for (i, (_, id, _)) in rows.iter().enumerate() {
            if *id >= n || std::mem::replace(&mut seen[*id], true) {
                return Err(bad(i + 2, format!("feature id {id} is duplicated or out of range")));
            }
        }

        let mut token_set: HashSet<&str> = HashSet::new();
        for (words, _, _) in &rows {
            token_set.extend(words.iter().map(String::as_str));
        }
        let mut tokens: Vec<String> = token_set.into_iter().map(String::from).collect();
        tokens.sort_unstable();
        let token_ids: HashMap<String, u32> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

        let mut ngrams = vec![Ngram { ids: [0; 3], len: 0 }; n];
        let mut doc_freq = vec![0; n];
        let mut index = HashMap::with_capacity(n);
        for (i, (words, id, df)) in rows.into_iter().enumerate() {
            let mut key = Ngram { ids: [0; 3], len: words.len() as u8 };
            for (slot, w) in key.ids.iter_mut().zip(&words) {
                *slot = token_ids[w];
            }
            if index.insert(key, id).is_some() {
                return Err(bad(i + 2, format!("duplicate n-gram {:?}", words.join(" "))));
            }
            ngrams[id] = key;
            doc_freq[id] = df;
        }
        Ok(Vocabulary { spec, tokens, token_ids, ngrams, index, doc_freq, n_docs })
    }
}

/// Collects every distinct n-gram of orders `1..=n_max` with its document
/// frequency. Shards are counted in parallel and merged; ids are assigned
/// afterwards by sorting, so the result does not depend on thread count.
pub fn build_vocabulary(docs: &[TokenSeq], spec: NgramSpec) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::invalid("cannot build a vocabulary from an empty corpus"));
    }
    let token_set: HashSet<&str> = docs
        .par_iter()
        .fold(HashSet::new, |mut set, doc| {
            set.extend(doc.iter().map(String::as_str));
            set
        })
        .reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return union(b, a);
            }
            a.extend(b);
            a
        });
    let mut tokens: Vec<String> = token_set.into_iter().map(String::from).collect();
    tokens.par_sort_unstable();
    if tokens.len() > u32::MAX as usize {
        return Err(Error::invalid("more than 2^32 distinct tokens"));
    }
    let token_ids: HashMap<&str, u32> = tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32)).collect();

    let df = docs
        .par_iter()
        .fold(HashMap::new, |mut df: HashMap<Ngram, u64>, doc| {
            let ids: Vec<Option<u32>> = doc.iter().map(|t| token_ids.get(t.as_str()).copied()).collect();
            let mut grams = Vec::new();
            for_each_ngram(&ids, spec.n_max, |g| grams.push(g));
            grams.sort_unstable();
            grams.dedup();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
            df
        })
        .reduce(HashMap::new, |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            for (g, c) in b {
                *a.entry(g).or_default() += c;
            }
            a
        });

    Ok(Vocabulary::from_counts(spec, tokens, df, docs.len() as u64))
}

fn union<'a>(mut big: HashSet<&'a str>, small: HashSet<&'a str>) -> HashSet<&'a str> {
    big.extend(small);
    big
}

/// Raw n-gram counts; out-of-vocabulary n-grams are ignored.
pub fn count_matrix(docs: &[TokenSeq], vocab: &Vocabulary) -> SparseMatrix {
    let rows: Vec<Vec<(usize, f64)>> = docs
        .par_iter()
        .map(|doc| {
            let mut ids = vocab.feature_ids(doc);
            ids.sort_unstable();
            let mut row: Vec<(usize, f64)> = Vec::new();
            for f in ids {
                match row.last_mut() {
                    Some((c, v)) if *c == f => *v += 1.0,
                    _ => row.push((f, 1.0)),
                }
            }
            row
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    row_ptr.push(0);
    let nnz = rows.iter().map(Vec::len).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    SparseMatrix::from_parts_unchecked(vocab.len(), row_ptr, cols, vals, Weighting::Counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(raw: &[&[&str]]) -> Vec<TokenSeq> {
        raw.iter().map(|d| d.iter().map(|t| t.to_string()).collect()).collect()
    }

    #[test]
    fn two_doc_bigram_vocabulary() {
        let d = docs(&[&["a", "b"], &["b", "c"]]);
        let v = build_vocabulary(&d, NgramSpec::BIGRAMS).unwrap();
        let names: Vec<String> = (0..v.len()).map(|f| v.ngram_string(f)).collect();
        // Hand enumeration: {a, b, c, (a,b), (b,c)}, sorted lexicographically.
        assert_eq!(names, vec!["a", "a b", "b", "b c", "c"]);
        assert_eq!(v.doc_freq(v.feature_id(&["b"]).unwrap()), 2);
        assert_eq!(v.doc_freq(v.feature_id(&["a", "b"]).unwrap()), 1);
        assert_eq!(v.n_docs(), 2);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(build_vocabulary(&[], NgramSpec::UNIGRAMS).is_err());
        assert!(NgramSpec::new(4).is_err());
        assert!(NgramSpec::new(0).is_err());
    }

    #[test]
    fn counts_examples() {
        let fit = docs(&[&["a", "b"]]);
        let v = build_vocabulary(&fit, NgramSpec::UNIGRAMS).unwrap();
        let m = count_matrix(&docs(&[&["a", "a", "b"], &["zz", "yy"]]), &v);
        assert_eq!(m.row(0), (&[0usize, 1][..], &[2.0, 1.0][..]));
        assert!(m.row(1).0.is_empty());

        let d = docs(&[&["a", "b"], &["b", "c"]]);
        let v = build_vocabulary(&d, NgramSpec::BIGRAMS).unwrap();
        let m = count_matrix(&d, &v);
        let row0: Vec<(String, f64)> =
            m.row(0).0.iter().zip(m.row(0).1).map(|(&c, &x)| (v.ngram_string(c), x)).collect();
        assert_eq!(row0, vec![("a".into(), 1.0), ("a b".into(), 1.0), ("b".into(), 1.0)]);
    }

    #[test]
    fn unknown_token_breaks_ngram_window() {
        let v = build_vocabulary(&docs(&[&["a", "b", "c"]]), NgramSpec::TRIGRAMS).unwrap();
        let ids = v.feature_ids(&docs(&[&["a", "x", "b", "c"]])[0]);
        let names: Vec<String> = ids.iter().map(|&f| v.ngram_string(f)).collect();
        assert_eq!(names, vec!["a", "b", "c", "b c"]);
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let d = docs(&[&["good", "food"], &["bad", "food", "here"]]);
        let v = build_vocabulary(&d, NgramSpec::BIGRAMS).unwrap();
        let back = Vocabulary::from_tsv(v.to_tsv().as_bytes()).unwrap();
        assert_eq!(back, v);

        let dup_id = "# vocabulary v1 n_docs=2 n_max=1\nngram\tfeature_id\tdoc_freq\na\t0\t1\nb\t0\t1\n";
        assert!(Vocabulary::from_tsv(dup_id.as_bytes()).is_err());
        let bad_df = "# vocabulary v1 n_docs=2 n_max=1\nngram\tfeature_id\tdoc_freq\na\t0\t3\n";
        assert!(Vocabulary::from_tsv(bad_df.as_bytes()).is_err());
        let too_long = "# vocabulary v1 n_docs=2 n_max=1\nngram\tfeature_id\tdoc_freq\na b\t0\t1\n";
        assert!(Vocabulary::from_tsv(too_long.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn vocabulary_invariants(raw in prop::collection::vec(prop::collection::vec("[a-d]{1,2}", 0..8), 1..8)) {
            let d: Vec<TokenSeq> = raw;
            let v1 = build_vocabulary(&d, NgramSpec::UNIGRAMS).unwrap();
            let v2 = build_vocabulary(&d, NgramSpec::BIGRAMS).unwrap();
            let v3 = build_vocabulary(&d, NgramSpec::TRIGRAMS).unwrap();
            prop_assert!(v1.len() <= v2.len() && v2.len() <= v3.len());
            for f in 0..v3.len() {
                let df = v3.doc_freq(f);
                prop_assert!(df >= 1 && df <= d.len() as u64);
                let g = v3.ngram(f);
                prop_assert_eq!(v3.feature_id(&g), Some(f));
                if f > 0 {
                    prop_assert!(v3.ngram(f - 1) < g);
                }
            }
            let counts = count_matrix(&d, &v3);
            prop_assert_eq!(counts.n_rows(), d.len());
            let mut df = vec![0u64; v3.len()];
            for &c in counts.col_indices() { df[c] += 1; }
            prop_assert_eq!(df, v3.doc_freqs().to_vec());
        }
    }
}
