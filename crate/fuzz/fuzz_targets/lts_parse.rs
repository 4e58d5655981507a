#![no_main]

use actmon::oracle::{format_lts, parse_lts};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lts) = parse_lts(text) {
        let printed = format_lts(&lts);
        assert_eq!(format_lts(&parse_lts(&printed).expect("formatted lts parses")), printed);
    }
});
