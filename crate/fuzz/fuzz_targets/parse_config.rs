#![no_main]

use dlrcs::harness::{parse_config, write_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        let back = parse_config(&write_config(&cfg)).expect("written config must parse");
        // NaN-free by validation, so equality is exact.
        assert_eq!(back, cfg);
    }
});
