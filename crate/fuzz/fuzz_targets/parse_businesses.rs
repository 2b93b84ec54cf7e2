#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::corpus::{parse_businesses, ParseOptions};

fuzz_target!(|data: &[u8]| {
    let _ = parse_businesses(data, ParseOptions { strict: false });
    let _ = parse_businesses(data, ParseOptions { strict: true });
});
