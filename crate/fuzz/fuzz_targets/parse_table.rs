#![no_main]

use libfuzzer_sys::fuzz_target;
use tailsitter::log::parse_table;
use tailsitter::sysid::{fit_planar_power, fit_pole_drag};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_table(text, &["V", "D"]) {
        assert!(rows.iter().all(|r| r.len() == 2));
        let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        let _ = fit_pole_drag(&samples, 1.225);
    }
    if let Ok(rows) = parse_table(text, &["pitch", "throttle", "power"]) {
        let samples: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
        let _ = fit_planar_power(&samples);
    }
});
