use std::path::Path;

use proptest::prelude::*;
use tailsitter::config::parse_config;
use tailsitter::log::{parse_log, parse_table, write_log_csv, LogFrame};
use tailsitter::scenario::Scenario;
use tailsitter::Error;

const SEED_CONFIG: &str = include_str!("../../../scenarios/closed_loop.cfg");

fn line_of(e: &Error) -> Option<usize> {
    match e {
        Error::Config { line, .. } | Error::SchemaMismatch { line, .. } | Error::NonMonotoneTime { line, .. } => {
            Some(*line)
        }
        _ => None,
    }
}

/// Replaces one byte of `seed` with a byte from a small hostile alphabet.
fn mutate(seed: &str, at: usize, with: u8) -> String {
    let alphabet = b"[]=#,:\n -.e0x\tnan";
    let mut b = seed.as_bytes().to_vec();
    let i = at % b.len();
    b[i] = alphabet[with as usize % alphabet.len()];
    String::from_utf8_lossy(&b).into_owned()
}

#[test]
fn config_errors_report_the_offending_line() {
    let e = parse_config("[a]\nx = 1\n[a]\n").unwrap_err();
    assert_eq!(line_of(&e), Some(3));
    let e = parse_config("x = 1\n").unwrap_err();
    assert_eq!(line_of(&e), Some(1));
    let e = parse_config("[a]\nx = 1\nx = 2\n").unwrap_err();
    assert_eq!(line_of(&e), Some(3));
}

#[test]
fn log_round_trips_through_csv() {
    let frames: Vec<LogFrame> = (0..20)
        .map(|k| LogFrame {
            t: 0.01 * k as f64,
            p: (k as f64 * 0.3).sin(),
            q: -0.1 * k as f64,
            rpm: Some(1650.0),
            ..LogFrame::default()
        })
        .collect();
    assert_eq!(parse_log(&write_log_csv(&frames)).unwrap(), frames);
}

#[test]
fn degree_units_are_converted() {
    let text = "# schema=1 rates=deg/s\nt,p,q,dx,dy,rpm,coll,thr,amps,volts,tas\n0,180,90,0,0,0,0,0,0,0,0\n";
    let f = parse_log(text).unwrap();
    assert!((f[0].p - std::f64::consts::PI).abs() < 1e-12);
    assert!((f[0].q - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn out_of_order_time_is_rejected() {
    let text = "t,p,q,dx,dy,rpm,coll,thr,amps,volts,tas\n0,0,0,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0,0,0\n";
    assert!(matches!(parse_log(text), Err(Error::NonMonotoneTime { line: 3, .. })));
}

proptest! {
    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn mutated_scenarios_never_panic(at in 0usize..10_000, with in any::<u8>()) {
        let text = mutate(SEED_CONFIG, at, with);
        if let Err(e) = Scenario::from_config_text(&text, Path::new("."), "fuzz", None) {
            if let Some(line) = line_of(&e) {
                prop_assert!(line <= text.lines().count().max(1));
            }
        }
    }

    #[test]
    fn log_parser_never_panics(text in "[-0-9tpqdxyrmcolhavs,.#=/e\\n ]{0,300}") {
        if let Ok(frames) = parse_log(&text) {
            prop_assert!(frames.windows(2).all(|w| w[1].t > w[0].t));
        }
    }

    #[test]
    fn table_parser_never_panics(text in "[-0-9VDn,.#e\\n ]{0,200}") {
        if let Ok(rows) = parse_table(&text, &["V", "D"]) {
            prop_assert!(rows.iter().all(|r| r.len() == 2 && r.iter().all(|v| v.is_finite())));
        }
    }
}
