#![no_main]

use libfuzzer_sys::fuzz_target;
use multilad::AnomalyScoreSeries;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(scores) = AnomalyScoreSeries::parse_csv(text) else {
        return;
    };
    assert!(scores.z_star.iter().all(|z| z.is_finite() && *z >= 0.0));
    let mut out = Vec::new();
    scores.write_csv(&mut out).unwrap();
    let again = AnomalyScoreSeries::parse_csv(std::str::from_utf8(&out).unwrap())
        .expect("written scores parse");
    assert_eq!(scores, again);
    let top = scores.top_n(7);
    assert!(top.len() == scores.len().min(7));
});
