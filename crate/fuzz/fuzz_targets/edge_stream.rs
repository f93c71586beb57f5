#![no_main]

use libfuzzer_sys::fuzz_target;
use multilad::graph::{header_for, parse_edge_stream, parse_edge_stream_with_header, write_edge_stream};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((g, header)) = parse_edge_stream_with_header(text, None) else {
        return;
    };
    // whatever parses must survive a write and re-read unchanged
    let mut out = Vec::new();
    write_edge_stream(&g, &header_for(&g, header.synthetic), &mut out).unwrap();
    let again = parse_edge_stream(std::str::from_utf8(&out).unwrap(), None)
        .expect("written stream parses");
    assert_eq!(g, again);
});
