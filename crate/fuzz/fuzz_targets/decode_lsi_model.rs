#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::lsi::LsiModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = LsiModel::decode(data) {
        assert_eq!(model.encode(), data);
    }
});
