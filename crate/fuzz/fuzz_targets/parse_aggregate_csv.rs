#![no_main]

use dlrcs::harness::{aggregate_to_csv, parse_aggregate_csv, render_svg, Metric, PlotSeries};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_aggregate_csv(text) {
        assert_eq!(
            parse_aggregate_csv(&aggregate_to_csv(&rows)).expect("written rows must parse"),
            rows
        );
        let series = PlotSeries::from_aggregate("fuzz", &rows, Metric::SdU);
        let _ = render_svg(&[series], "fuzz", "x", "y");
    }
});
