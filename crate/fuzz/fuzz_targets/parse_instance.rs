#![no_main]

use dlrcs::problem::{parse_instance, write_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = parse_instance(text) {
        let again = write_instance(&file.instance, file.measurements.as_ref());
        parse_instance(&again).expect("written instance must parse");
    }
});
