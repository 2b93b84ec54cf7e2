#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::preprocess::StopwordList;

fuzz_target!(|data: &[u8]| {
    if let Ok(list) = StopwordList::parse("fuzz", data) {
        assert_eq!(list.sorted().len(), list.len());
    }
});
