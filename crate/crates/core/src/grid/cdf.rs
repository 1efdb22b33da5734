//! Reader for the IEEE Common Data Format (fixed-column text).

use super::{Branch, Bus, BusKind, GridCase};
use crate::error::{Error, Result};

/// 1-based inclusive column slice, trimmed; empty when the line is short.
fn cols(line: &str, start: usize, end: usize) -> &str {
    let bytes = line.as_bytes();
    let s = (start - 1).min(bytes.len());
    let e = end.min(bytes.len());
    line.get(s..e).unwrap_or("").trim()
}

fn num<T: std::str::FromStr>(
    line: &str,
    lineno: usize,
    field: &'static str,
    span: (usize, usize),
    default: Option<T>,
) -> Result<T> {
    let raw = cols(line, span.0, span.1);
    if raw.is_empty() {
        return default.ok_or(Error::Parse {
            line: lineno,
            field,
            message: "missing value".into(),
        });
    }
    raw.parse().map_err(|_| Error::Parse {
        line: lineno,
        field,
        message: format!("cannot parse `{raw}`"),
    })
}

#[derive(PartialEq)]
enum Section {
    Preamble,
    Buses,
    Branches,
    Other,
}

pub fn parse_cdf(text: &str) -> Result<GridCase> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (title_no, title) = lines.next().ok_or(Error::Parse {
        line: 1,
        field: "title",
        message: "empty file".into(),
    })?;
    let base_mva: f64 = num(title, title_no, "mva_base", (32, 37), None)?;
    let name = cols(title, 46, 73).to_string();

    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut section = Section::Preamble;
    let mut saw_end = false;

    for (no, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if section != Section::Buses && section != Section::Branches {
            if trimmed.starts_with("BUS DATA FOLLOWS") {
                section = Section::Buses;
            } else if trimmed.starts_with("BRANCH DATA FOLLOWS") {
                section = Section::Branches;
            } else if trimmed.starts_with("END OF DATA") {
                saw_end = true;
                break;
            } else if trimmed.contains("FOLLOW") {
                section = Section::Other;
            }
            continue;
        }
        if trimmed.starts_with("-999") {
            section = Section::Other;
            continue;
        }
        match section {
            Section::Buses => buses.push(parse_bus(line, no)?),
            Section::Branches => branches.push(parse_branch(line, no)?),
            _ => unreachable!(),
        }
    }
    if !saw_end {
        log::warn!("cdf: no END OF DATA marker; using records read so far");
    }
    if buses.is_empty() {
        return Err(Error::Parse {
            line: 1,
            field: "bus data",
            message: "no BUS DATA section".into(),
        });
    }
    GridCase::new(name, base_mva, buses, branches)
}

fn parse_bus(line: &str, no: usize) -> Result<Bus> {
    let id: u32 = num(line, no, "bus number", (1, 4), None)?;
    let code: i32 = num(line, no, "bus type", (25, 26), Some(0))?;
    let kind = match code {
        0 | 1 => BusKind::PQ,
        2 => BusKind::PV,
        3 => BusKind::Slack,
        other => {
            return Err(Error::Parse {
                line: no,
                field: "bus type",
                message: format!("unknown type code {other}"),
            })
        }
    };
    let final_v: f64 = num(line, no, "final voltage", (28, 33), Some(1.0))?;
    let desired_v: f64 = num(line, no, "desired volts", (85, 90), Some(0.0))?;
    let voltage_setpoint = match kind {
        BusKind::PQ => None,
        _ if desired_v > 0.0 => Some(desired_v),
        _ => Some(final_v),
    };
    Ok(Bus {
        id,
        name: cols(line, 6, 17).to_string(),
        kind,
        voltage_setpoint,
        load_p: num(line, no, "load MW", (41, 49), Some(0.0))?,
        load_q: num(line, no, "load MVAR", (50, 58), Some(0.0))?,
        gen_p: num(line, no, "gen MW", (59, 67), Some(0.0))?,
        gen_q: num(line, no, "gen MVAR", (68, 75), Some(0.0))?,
        base_kv: num(line, no, "base KV", (77, 83), Some(0.0))?,
        shunt_g: num(line, no, "shunt G", (107, 114), Some(0.0))?,
        shunt_b: num(line, no, "shunt B", (115, 122), Some(0.0))?,
    })
}

fn parse_branch(line: &str, no: usize) -> Result<Branch> {
    let ratio: f64 = num(line, no, "turns ratio", (77, 82), Some(0.0))?;
    let shift: f64 = num(line, no, "phase shift", (84, 90), Some(0.0))?;
    if shift != 0.0 {
        log::warn!("cdf line {no}: ignoring phase shift of {shift} degrees");
    }
    Ok(Branch {
        from_bus: num(line, no, "tap bus", (1, 4), None)?,
        to_bus: num(line, no, "z bus", (6, 9), None)?,
        resistance_r: num(line, no, "R", (20, 29), None)?,
        reactance_x: num(line, no, "X", (30, 40), None)?,
        charging_b: num(line, no, "B", (41, 50), Some(0.0))?,
        in_service: true,
        tap_ratio: if ratio == 0.0 { 1.0 } else { ratio },
    })
}
