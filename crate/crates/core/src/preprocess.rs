//! Text normalization: lowercase, punctuation to spaces, stopword removal.

use std::collections::HashSet;
use std::io::BufRead;

use crate::error::{Error, Result};

/// The classic 127-word English stoplist distributed with common NLP
/// toolkits, minus the negations `no`, `nor` and `not` so that phrases
/// like "not good" survive into bigram features.
const ENGLISH: &[&str] = &[
    "i",
    "me",
    "my",
    "myself",
    "we",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "what",
    "which",
    "who",
    "whom",
    "this",
    "that",
    "these",
    "those",
    "am",
    "is",
    "are",
    "was",
    "were",
    "be",
    "been",
    "being",
    "have",
    "has",
    "had",
    "having",
    "do",
    "does",
    "did",
    "doing",
    "a",
    "an",
    "the",
    "and",
    "but",
    "if",
    "or",
    "because",
    "as",
    "until",
    "while",
    "of",
    "at",
    "by",
    "for",
    "with",
    "about",
    "against",
    "between",
    "into",
    "through",
    "during",
    "before",
    "after",
    "above",
    "below",
    "to",
    "from",
    "up",
    "down",
    "in",
    "out",
    "on",
    "off",
    "over",
    "under",
    "again",
    "further",
    "then",
    "once",
    "here",
    "there",
    "when",
    "where",
    "why",
    "how",
    "all",
    "any",
    "both",
    "each",
    "few",
    "more",
    "most",
    "other",
    "some",
    "such",
    "only",
    "own",
    "same",
    "so",
    "than",
    "too",
    "very",
    "s",
    "t",
    "can",
    "will",
    "just",
    "don",
    "should",
    "now",
];

pub const ENGLISH_TAG: &str = "english-127-minus-negations/v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    tag: String,
    words: HashSet<String>,
}

impl StopwordList {
    pub fn english() -> Self {
        StopwordList { tag: ENGLISH_TAG.to_string(), words: ENGLISH.iter().map(|w| w.to_string()).collect() }
    }

    pub fn empty() -> Self {
        StopwordList { tag: "empty".into(), words: HashSet::new() }
    }

    /// Builds a list from words that must already be lowercase and non-empty.
    pub fn from_words<I, S>(tag: impl Into<String>, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = HashSet::new();
        for w in words {
            let w = w.into();
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("bad stopword {w:?}")));
            }
            if w.to_lowercase() != w {
                return Err(Error::invalid(format!("stopword {w:?} is not lowercase")));
            }
            set.insert(w);
        }
        Ok(StopwordList { tag: tag.into(), words: set })
    }

    /// Reads one word per line. Blank lines and lines starting with `#` are
    /// skipped; words are trimmed and lowercased.
    pub fn parse<R: BufRead>(tag: impl Into<String>, input: R) -> Result<Self> {
        let mut words = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let w = line.trim();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            if w.chars().any(char::is_whitespace) {
                return Err(Error::Parse { line: i + 1, message: format!("stopword {w:?} contains whitespace") });
            }
            words.push(w.to_lowercase());
        }
        Self::from_words(tag, words)
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Words in sorted order.
    pub fn sorted(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.words.iter().map(String::as_str).collect();
        out.sort_unstable();
        out
    }
}

/// Tokens produced by [`Preprocessor::tokens`].
pub type TokenSeq = Vec<String>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Treat ASCII digits like punctuation.
    pub strip_digits: bool,
}

fn is_separator(c: char, opts: NormalizeOptions) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation() || (opts.strip_digits && c.is_ascii_digit())
}

/// Lowercases, replaces ASCII punctuation with spaces and collapses
/// whitespace runs to a single space with no leading or trailing space.
pub fn normalize(text: &str) -> String {
    normalize_with(text, NormalizeOptions::default())
}

pub fn normalize_with(text: &str, opts: NormalizeOptions) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if is_separator(c, opts) {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        for lc in c.to_lowercase() {
            out.push(lc);
        }
    }
    out
}

pub fn tokenize(text: &str) -> TokenSeq {
    text.split_whitespace().map(String::from).collect()
}

pub fn remove_stopwords(tokens: TokenSeq, list: &StopwordList) -> TokenSeq {
    if list.is_empty() {
        return tokens;
    }
    tokens.into_iter().filter(|t| !list.contains(t)).collect()
}

/// The full normalize → tokenize → stopword pipeline.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stopwords: StopwordList,
    pub options: NormalizeOptions,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor { stopwords: StopwordList::english(), options: NormalizeOptions::default() }
    }
}

impl Preprocessor {
    pub fn tokens(&self, text: &str) -> TokenSeq {
        remove_stopwords(tokenize(&normalize_with(text, self.options)), &self.stopwords)
    }

    pub fn tokens_all<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<TokenSeq> {
        use rayon::prelude::*;
        texts.par_iter().map(|t| self.tokens(t.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &[&str]) -> TokenSeq {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn english_list_is_pinned() {
        let list = StopwordList::english();
        assert_eq!(ENGLISH.len(), 124);
        assert_eq!(list.len(), 124);
        for negation in ["no", "nor", "not"] {
            assert!(!list.contains(negation));
        }
        for w in ["the", "that", "is"] {
            assert!(list.contains(w));
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("GREAT food!!!"), "great food");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("don't stop... NOW"), "don t stop now");
        assert_eq!(normalize("food.Great"), "food great");
        assert_eq!(normalize("  a\t\nb  "), "a b");
        assert_eq!(normalize("Café 5 stars"), "café 5 stars");
    }

    #[test]
    fn strip_digits_flag() {
        let opts = NormalizeOptions { strip_digits: true };
        assert_eq!(normalize_with("5stars in 2014", opts), "stars in");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("great food"), seq(&["great", "food"]));
        assert!(tokenize("  ").is_empty());
        assert_eq!(tokenize("a b  c"), seq(&["a", "b", "c"]));
    }

    #[test]
    fn stopword_examples() {
        let list = StopwordList::from_words("t", ["the", "is"]).unwrap();
        assert_eq!(remove_stopwords(seq(&["the", "food", "is", "great"]), &list), seq(&["food", "great"]));
        let input = seq(&["the", "food"]);
        assert_eq!(remove_stopwords(input.clone(), &StopwordList::empty()), input);
        assert!(remove_stopwords(seq(&["the", "is", "the"]), &list).is_empty());
    }

    #[test]
    fn stopword_file_parsing() {
        let list = StopwordList::parse("custom", "# comment\nThe\n\n  and \n".as_bytes()).unwrap();
        assert_eq!(list.sorted(), vec!["and", "the"]);
        assert!(StopwordList::parse("bad", "two words\n".as_bytes()).is_err());
        assert!(StopwordList::from_words("bad", ["Upper"]).is_err());
    }

    #[test]
    fn pipeline_keeps_negation() {
        let p = Preprocessor::default();
        assert_eq!(p.tokens("The food is NOT delicious."), seq(&["food", "not", "delicious"]));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(text in "\\PC{0,60}") {
            let once = normalize(&text);
            prop_assert_eq!(normalize(&once), once.clone());
        }

        #[test]
        fn tokens_are_clean(text in "\\PC{0,60}") {
            let p = Preprocessor::default();
            for t in p.tokens(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(|c| c.is_whitespace() || c.is_ascii_punctuation()));
                prop_assert!(!p.stopwords.contains(&t));
            }
        }

        #[test]
        fn stopword_removal_idempotent(words in prop::collection::vec("(the|is|a|food|good|not)", 0..20)) {
            let list = StopwordList::english();
            let once = remove_stopwords(words.clone(), &list);
            prop_assert!(once.len() <= words.len());
            prop_assert_eq!(remove_stopwords(once.clone(), &list), once);
        }
    }
}
