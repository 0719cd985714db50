#![no_main]

use libfuzzer_sys::fuzz_target;
use selsample::sampler::{parse_trace_csv, write_trace_csv};
use selsample::ErrorCurve;
use selsample_cli::commands::CompareTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_trace_csv(text) {
        let _ = write_trace_csv(&rows);
    }
    if let Ok(curve) = ErrorCurve::parse_csv(text) {
        let _ = curve.to_csv();
    }
    if let Ok(table) = CompareTable::parse_csv(text) {
        let _ = table.to_csv();
    }
});
