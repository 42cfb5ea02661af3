#![no_main]

use libfuzzer_sys::fuzz_target;
use tailsitter::log::{parse_log, write_log_csv};
use tailsitter::sysid::{fit_rate_model, FIT_CUTOFF};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(frames) = parse_log(text) else { return };
    assert!(frames.windows(2).all(|w| w[1].t > w[0].t));
    let reparsed = parse_log(&write_log_csv(&frames)).expect("written log parses");
    assert_eq!(reparsed.len(), frames.len());
    let _ = fit_rate_model(&frames, FIT_CUTOFF);
});
