#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::classify::TrainedModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = TrainedModel::decode(data) {
        assert_eq!(model.encode(), data);
    }
});
