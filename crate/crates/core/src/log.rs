//! Flight-log CSV ingestion and export.
//!
//! Schema version 1:
//!
//! ```text
//! # schema=1 rates=rad/s
//! t,p,q,dx,dy,rpm,coll,thr,amps,volts,tas
//! 0,0.01,-0.02,120,-35,1650,0.55,0.7,18.2,23.1,
//! ```
//!
//! Lines starting with `#` before the header may carry `key=value`
//! directives: `schema` (only `1` is accepted) and `rates` (`rad/s` or
//! `deg/s`; deg/s logs are converted on ingest). `t, p, q, dx, dy` are
//! required in every row; the remaining channels may be left empty.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub const LOG_HEADER: &str = "t,p,q,dx,dy,rpm,coll,thr,amps,volts,tas";
pub const SCHEMA_VERSION: u32 = 1;
const COLUMNS: usize = 11;

/// One timestamped flight-log record.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogFrame {
    /// Time, s.
    pub t: f64,
    /// Roll rate, rad/s.
    pub p: f64,
    /// Pitch rate, rad/s.
    pub q: f64,
    /// Roll cyclic command.
    pub delta_x: f64,
    /// Pitch cyclic command.
    pub delta_y: f64,
    pub rpm: Option<f64>,
    pub collective_cmd: Option<f64>,
    pub throttle: Option<f64>,
    /// Battery current, A.
    pub current: Option<f64>,
    /// Battery voltage, V.
    pub voltage: Option<f64>,
    /// True airspeed, m/s.
    pub airspeed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnits {
    RadPerSec,
    DegPerSec,
}

impl RateUnits {
    fn to_rad(self, v: f64) -> f64 {
        match self {
            RateUnits::RadPerSec => v,
            RateUnits::DegPerSec => v.to_radians(),
        }
    }
}

/// Parses log text. Line numbers in errors are 1-based.
pub fn parse_log(text: &str) -> Result<Vec<LogFrame>> {
    let mut units = RateUnits::RadPerSec;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let header_line = loop {
        let Some((n, line)) = lines.next() else {
            return Err(Error::SchemaMismatch {
                line: 1,
                msg: "empty log (missing header)".into(),
            });
        };
        let trimmed = line.trim();
        if let Some(directive) = trimmed.strip_prefix('#') {
            apply_directives(directive, n, &mut units)?;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        break (n, trimmed);
    };
    let header: Vec<&str> = header_line.1.split(',').map(str::trim).collect();
    let expected: Vec<&str> = LOG_HEADER.split(',').collect();
    if header != expected {
        return Err(Error::SchemaMismatch {
            line: header_line.0,
            msg: format!("header '{}' does not match '{LOG_HEADER}'", header_line.1),
        });
    }

    let mut frames: Vec<LogFrame> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS {
            return Err(Error::SchemaMismatch {
                line: n,
                msg: format!("expected {COLUMNS} fields, found {}", fields.len()),
            });
        }
        let required = |i: usize| -> Result<f64> {
            parse_number(fields[i], n, expected[i])?.ok_or_else(|| Error::SchemaMismatch {
                line: n,
                msg: format!("missing required value for '{}'", expected[i]),
            })
        };
        let optional = |i: usize| parse_number(fields[i], n, expected[i]);
        let frame = LogFrame {
            t: required(0)?,
            p: units.to_rad(required(1)?),
            q: units.to_rad(required(2)?),
            delta_x: required(3)?,
            delta_y: required(4)?,
            rpm: optional(5)?,
            collective_cmd: optional(6)?,
            throttle: optional(7)?,
            current: optional(8)?,
            voltage: optional(9)?,
            airspeed: optional(10)?,
        };
        if let Some(prev) = frames.last() {
            if !(frame.t > prev.t) {
                return Err(Error::NonMonotoneTime {
                    line: n,
                    t: frame.t,
                    prev: prev.t,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

fn apply_directives(text: &str, line: usize, units: &mut RateUnits) -> Result<()> {
    for token in text.split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            continue;
        };
        match key {
            "schema" => {
                if value.parse::<u32>().ok() != Some(SCHEMA_VERSION) {
                    return Err(Error::SchemaMismatch {
                        line,
                        msg: format!("unsupported schema version '{value}'"),
                    });
                }
            }
            "rates" => {
                *units = match value {
                    "rad/s" => RateUnits::RadPerSec,
                    "deg/s" => RateUnits::DegPerSec,
                    other => {
                        return Err(Error::SchemaMismatch {
                            line,
                            msg: format!("unknown rate unit '{other}'"),
                        })
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn parse_number(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::SchemaMismatch {
            line,
            msg: format!("invalid number '{field}' in column '{name}'"),
        }),
    }
}

/// Reads and validates a log file.
pub fn ingest_log(path: impl AsRef<Path>) -> Result<Vec<LogFrame>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text)
}

/// Serialises frames in schema version 1 with rates in rad/s.
pub fn write_log_csv(frames: &[LogFrame]) -> String {
    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut s = format!("# schema={SCHEMA_VERSION} rates=rad/s\n{LOG_HEADER}\n");
    for f in frames {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.t,
            f.p,
            f.q,
            f.delta_x,
            f.delta_y,
            opt(f.rpm),
            opt(f.collective_cmd),
            opt(f.throttle),
            opt(f.current),
            opt(f.voltage),
            opt(f.airspeed)
        );
    }
    s
}

/// Parses a headed numeric CSV whose header must be exactly `columns`.
/// Lines starting with `#` and blank lines are skipped. Every value is
/// required and must be finite.
pub fn parse_table(text: &str, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((n, header)) = lines.next() else {
        return Err(Error::SchemaMismatch {
            line: 1,
            msg: format!("empty file (expected header '{}')", columns.join(",")),
        });
    };
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != columns {
        return Err(Error::SchemaMismatch {
            line: n,
            msg: format!("header '{header}' does not match '{}'", columns.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::SchemaMismatch {
                line: n,
                msg: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        let row = fields
            .iter()
            .zip(columns)
            .map(|(f, c)| {
                parse_number(f, n, c)?.ok_or_else(|| Error::SchemaMismatch {
                    line: n,
                    msg: format!("missing value for '{c}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a headed numeric CSV from disk.
pub fn read_table(path: impl AsRef<Path>, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_schema_mismatch() {
        assert!(matches!(parse_log(""), Err(Error::SchemaMismatch { line: 1, .. })));
        assert!(matches!(parse_log("# schema=1\n"), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn wrong_header() {
        let r = parse_log("t,p,q\n0,1,2\n");
        assert!(matches!(r, Err(Error::SchemaMismatch { line: 1, .. })));
    }

    #[test]
    fn deg_per_second_converted() {
        let text = format!("# rates=deg/s\n{LOG_HEADER}\n0,90,-180,1,2,,,,,,\n");
        let f = parse_log(&text).unwrap();
        assert!((f[0].p - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((f[0].q + std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(f[0].delta_x, 1.0);
        assert_eq!(f[0].rpm, None);
    }

    #[test]
    fn duplicate_timestamp_reports_line() {
        let text = format!("{LOG_HEADER}\n0,0,0,0,0,,,,,,\n0.01,0,0,0,0,,,,,,\n0.01,0,0,0,0,,,,,,\n");
        match parse_log(&text) {
            Err(Error::NonMonotoneTime { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_required_and_bad_numbers() {
        let text = format!("{LOG_HEADER}\n0,,0,0,0,,,,,,\n");
        assert!(matches!(parse_log(&text), Err(Error::SchemaMismatch { line: 2, .. })));
        let text = format!("{LOG_HEADER}\n0,abc,0,0,0,,,,,,\n");
        assert!(matches!(parse_log(&text), Err(Error::SchemaMismatch { line: 2, .. })));
        let text = format!("{LOG_HEADER}\n0,inf,0,0,0,,,,,,\n");
        assert!(matches!(parse_log(&text), Err(Error::SchemaMismatch { line: 2, .. })));
        let text = format!("{LOG_HEADER}\n0,0,0,0\n");
        assert!(matches!(parse_log(&text), Err(Error::SchemaMismatch { line: 2, .. })));
    }

    #[test]
    fn unsupported_schema_version() {
        let text = format!("# schema=2\n{LOG_HEADER}\n");
        assert!(matches!(parse_log(&text), Err(Error::SchemaMismatch { line: 1, .. })));
    }

    #[test]
    fn write_then_parse() {
        let frames = vec![
            LogFrame {
                t: 0.0,
                p: 0.1,
                q: -0.2,
                delta_x: 1.5,
                delta_y: -2.5,
                rpm: Some(1650.0),
                current: Some(18.0),
                ..LogFrame::default()
            },
            LogFrame {
                t: 0.01,
                airspeed: Some(21.5),
                ..LogFrame::default()
            },
        ];
        assert_eq!(parse_log(&write_log_csv(&frames)).unwrap(), frames);
    }

    #[test]
    fn crlf_and_blank_lines() {
        let text = format!("\r\n{LOG_HEADER}\r\n0,0,0,0,0,,,,,,\r\n\r\n1,0,0,0,0,,,,,,\r\n");
        assert_eq!(parse_log(&text).unwrap().len(), 2);
    }

    #[test]
    fn table_parsing() {
        let rows = parse_table("# c\nV,D\n10, 11.9\n\n24,68.8\n", &["V", "D"]).unwrap();
        assert_eq!(rows, vec![vec![10.0, 11.9], vec![24.0, 68.8]]);
        assert!(matches!(parse_table("", &["V", "D"]), Err(Error::SchemaMismatch { line: 1, .. })));
        assert!(matches!(parse_table("V,X\n", &["V", "D"]), Err(Error::SchemaMismatch { line: 1, .. })));
        assert!(matches!(parse_table("V,D\n1\n", &["V", "D"]), Err(Error::SchemaMismatch { line: 2, .. })));
        assert!(matches!(parse_table("V,D\n1,\n", &["V", "D"]), Err(Error::SchemaMismatch { line: 2, .. })));
    }
}
