#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::corpus::{parse_reviews, ParseOptions};

fuzz_target!(|data: &[u8]| {
    if let Ok(parsed) = parse_reviews(data, ParseOptions { strict: false }) {
        assert!(parsed.records.iter().all(|r| (1..=5).contains(&r.stars.value())));
    }
    let _ = parse_reviews(data, ParseOptions { strict: true });
});
