#![no_main]

use libfuzzer_sys::fuzz_target;
use rating_forge::vectorize::Vocabulary;

fuzz_target!(|data: &[u8]| {
    if let Ok(vocab) = Vocabulary::from_tsv(data) {
        let again = Vocabulary::from_tsv(vocab.to_tsv().as_bytes()).unwrap();
        assert_eq!(again, vocab);
    }
});
