#![no_main]

use dlrcs::harness::aggregate_traces;
use dlrcs::solver::{parse_trace_csv, traces_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(traces) = parse_trace_csv(text) {
        parse_trace_csv(&traces_to_csv(&traces)).expect("written traces must parse");
        let _ = aggregate_traces(&traces);
    }
});
