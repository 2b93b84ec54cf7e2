#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::matrix::SparseMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = SparseMatrix::decode(data) {
        assert_eq!(m.encode(), data);
        let _ = m.debug_dump();
    }
});
