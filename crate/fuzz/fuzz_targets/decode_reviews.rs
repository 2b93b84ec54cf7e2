#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::corpus::{decode_reviews, encode_reviews};

fuzz_target!(|data: &[u8]| {
    if let Ok(reviews) = decode_reviews(data) {
        assert_eq!(encode_reviews(&reviews), data);
    }
});
