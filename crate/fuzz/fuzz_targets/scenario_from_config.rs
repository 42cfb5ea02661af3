#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use tailsitter::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = Scenario::from_config_text(text, Path::new("."), "fuzz", None) {
            assert!(!s.name.is_empty());
        }
    }
});
