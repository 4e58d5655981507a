#![no_main]

use actmon::bench::{read_csv, write_csv, MetricsRow};
use libfuzzer_sys::fuzz_target;

fn emit(rows: &[MetricsRow]) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(rows, &mut out).expect("write to memory");
    out
}

fuzz_target!(|data: &[u8]| {
    // Compared as text: NaN cells reload fine but never compare equal.
    if let Ok(rows) = read_csv(data) {
        let first = emit(&rows);
        assert_eq!(emit(&read_csv(first.as_slice()).expect("reload")), first);
    }
});
