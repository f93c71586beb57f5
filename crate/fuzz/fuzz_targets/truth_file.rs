#![no_main]

use libfuzzer_sys::fuzz_target;
use multilad::evaluation::{parse_truth, write_truth};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(truth) = parse_truth(text) else {
        return;
    };
    let mut out = Vec::new();
    write_truth(&truth, &mut out).unwrap();
    let again = parse_truth(std::str::from_utf8(&out).unwrap()).expect("written truth parses");
    assert_eq!(truth, again);
});
