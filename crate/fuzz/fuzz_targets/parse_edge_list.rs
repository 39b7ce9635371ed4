#![no_main]

use dlrcs::topology::parse_edge_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(topo) = parse_edge_list(text) {
        let back = parse_edge_list(&topo.to_edge_list()).expect("written edge list must parse");
        assert_eq!(back.edges(), topo.edges());
        let _ = topo.is_strongly_connected();
    }
});
