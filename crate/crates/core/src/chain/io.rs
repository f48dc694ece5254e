//! Versioned CSV traces, power-sweep point files and JSON configs.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;

use super::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::fitkit::{ComplexTrace, PowerSweepPoint};
use crate::rfnet::FrequencyGrid;

pub const TRACE_HEADER: [&str; 3] = ["freq_hz", "s21_re", "s21_im"];
pub const POINTS_HEADER: [&str; 3] = ["n_photons", "q_loaded", "q_uncertainty"];

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

fn write_table<W: Write>(w: W, kind: &str, header: &[&str], rows: impl Iterator<Item = [f64; 3]>) -> Result<()> {
    let mut w = w;
    writeln!(w, "# cryomux {kind} format_version={FORMAT_VERSION}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        out.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn read_table<R: Read>(mut r: R, header: &[&str]) -> Result<Vec<(usize, [f64; 3])>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.strip_prefix('#') else { break };
        if let Some(v) = comment.split_whitespace().find_map(|t| t.strip_prefix("format_version=")) {
            if v.parse::<u32>().ok() != Some(FORMAT_VERSION) {
                return Err(Error::Parse { line: i + 1, message: format!("unsupported format_version {v}") });
            }
        }
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let got = rd.headers().map_err(csv_err)?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        let line = text.lines().position(|l| !l.starts_with('#') && !l.trim().is_empty()).map_or(1, |i| i + 1);
        return Err(Error::Parse { line, message: format!("expected header {}, found {}", header.join(","), got.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut row = [0.0; 3];
        for (k, field) in rec.iter().enumerate() {
            row[k] = field.parse::<f64>().map_err(|e| Error::Parse { line, message: format!("field {}: {e} ({field:?})", header[k]) })?;
        }
        rows.push((line, row));
    }
    Ok(rows)
}

pub fn write_trace_csv<W: Write>(w: W, trace: &ComplexTrace<f64>) -> Result<()> {
    let rows = trace.grid.points().iter().zip(&trace.s21).map(|(&f, s)| [f, s.re, s.im]);
    write_table(w, "trace", &TRACE_HEADER, rows)
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<ComplexTrace<f64>> {
    let rows = read_table(r, &TRACE_HEADER)?;
    let grid = FrequencyGrid::new(rows.iter().map(|(_, r)| r[0]).collect())?;
    ComplexTrace::new(grid, rows.iter().map(|(_, r)| Complex::new(r[1], r[2])).collect(), None)
}

pub fn write_points_csv<W: Write>(w: W, points: &[PowerSweepPoint<f64>]) -> Result<()> {
    write_table(w, "power-sweep", &POINTS_HEADER, points.iter().map(|p| [p.n_photons, p.q_loaded, p.q_uncertainty]))
}

pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<PowerSweepPoint<f64>>> {
    let rows = read_table(r, &POINTS_HEADER)?;
    rows.iter()
        .map(|&(line, r)| {
            let p = PowerSweepPoint { n_photons: r[0], q_loaded: r[1], q_uncertainty: r[2] };
            p.validate().map_err(|e| Error::Parse { line, message: e.to_string() })?;
            Ok(p)
        })
        .collect()
}

/// Parses JSON, reporting the line and column of syntax or schema errors.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: format!("column {}: {e}", e.column()) })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}
