#![no_main]

use actmon::syntax::{parse_unchecked, pretty};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_unchecked(text) {
        let printed = pretty(&f);
        let again = parse_unchecked(&printed).expect("pretty output parses");
        assert!(again.alpha_eq(&f), "{printed}");
    }
});
