#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::preprocess::{normalize, Preprocessor};

fuzz_target!(|text: &str| {
    let once = normalize(text);
    assert_eq!(normalize(&once), once);
    for token in Preprocessor::default().tokens(text) {
        assert!(!token.is_empty() && !token.contains(char::is_whitespace));
    }
});
