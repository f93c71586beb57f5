#![no_main]

use libfuzzer_sys::fuzz_target;
use multilad::generators::ExperimentFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = ExperimentFile::parse(text) else {
        return;
    };
    let Ok((schedule, cfg)) = file.resolve() else {
        return;
    };
    let total: usize = schedule.segments().iter().map(|s| s.length).sum();
    assert_eq!(total, schedule.total_steps());
    assert!(schedule.ground_truth().iter().all(|&(t, _)| t > 0 && t < total));
    assert!(cfg.validate().is_ok());
});
