#![no_main]

use actmon::oracle::{format_trace, parse_trace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = parse_trace(text) {
        let again = parse_trace(&format_trace(&trace)).expect("formatted trace parses");
        let actions = |t: &[actmon::logic::EventInstance]| t.iter().map(|e| e.action.clone()).collect::<Vec<_>>();
        assert_eq!(actions(&trace), actions(&again));
    }
});
