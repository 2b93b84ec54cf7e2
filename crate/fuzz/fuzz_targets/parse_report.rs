#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::evaluate::{parse_report, write_report};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_report(data) {
        // wall_seconds is written at millisecond precision, so compare after one pass
        let text = write_report(&rows);
        let again = parse_report(text.as_bytes()).unwrap();
        assert_eq!(write_report(&again), text);
    }
});
