//! CSV file formats. Units are fixed: ns, Ω, fJ.
//!
//! Floats are written in shortest round-trip form, so every file parses back
//! to the exact values that produced it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crossbar::{ArrayConfig, ArrayState, EnergyReport};
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::recording::{CaptureResult, Fidelity};
use crate::variability::{TrialRecord, TrialReport};
use crate::wavefront::Wavefront;

const FJ_PER_J: f64 = 1e15;

fn parse_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn csv_err(path: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
    let msg = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    parse_err(path, format!("{line}{msg}"))
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, path: &str, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            path,
            format!(
                "line 1: expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn write_rows<W: Write, S: Serialize>(out: W, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct WavefrontRow {
    channel: usize,
    time_ns: f64,
}

pub const WAVEFRONT_HEADER: &[&str] = &["channel", "time_ns"];

pub fn write_wavefront<W: Write>(out: W, w: &Wavefront<f64>) -> Result<()> {
    write_rows(
        out,
        w.times()
            .iter()
            .enumerate()
            .map(|(channel, &time_ns)| WavefrontRow { channel, time_ns }),
    )
}

/// Reads `channel,time_ns` rows; channels must cover `0..N` exactly once, in any order.
pub fn read_wavefront<R: Read>(input: R, path: &str) -> Result<Wavefront<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut rdr, path, WAVEFRONT_HEADER)?;
    let mut by_channel = BTreeMap::new();
    for rec in rdr.deserialize::<WavefrontRow>() {
        let row = rec.map_err(|e| csv_err(path, e))?;
        if by_channel.insert(row.channel, row.time_ns).is_some() {
            return Err(parse_err(path, format!("channel {} listed twice", row.channel)));
        }
    }
    if by_channel.is_empty() {
        return Err(parse_err(path, "no channels"));
    }
    if let Some((i, ch)) = by_channel.keys().enumerate().find(|(i, ch)| i != *ch) {
        return Err(parse_err(
            path,
            format!("channels must be contiguous from 0; expected {i}, found {ch}"),
        ));
    }
    Wavefront::new(by_channel.into_values().collect()).map_err(|e| parse_err(path, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    row: usize,
    col: usize,
    resistance_ohm: f64,
}

pub const GRID_HEADER: &[&str] = &["row", "col", "resistance_ohm"];

pub fn write_grid<W: Write>(out: W, state: &ArrayState<f64>) -> Result<()> {
    write_rows(
        out,
        state
            .resistance_grid()
            .into_iter()
            .map(|(row, col, resistance_ohm)| GridRow {
                row,
                col,
                resistance_ohm,
            }),
    )
}

/// Resistance grid as `(row, col, ohms)` cells.
pub fn read_grid<R: Read>(input: R, path: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut rdr, path, GRID_HEADER)?;
    let mut cells = Vec::new();
    for rec in rdr.deserialize::<GridRow>() {
        let r = rec.map_err(|e| csv_err(path, e))?;
        cells.push((r.row, r.col, r.resistance_ohm));
    }
    if cells.is_empty() {
        return Err(parse_err(path, "no cells"));
    }
    Ok(cells)
}

/// Array sized to fit `cells`, unlisted cells left ON, listed cells set to their resistance.
pub fn array_from_grid(
    cells: &[(usize, usize, f64)],
    base: &ArrayConfig<f64>,
    params: &DeviceParams<f64>,
    path: &str,
) -> Result<(ArrayConfig<f64>, ArrayState<f64>)> {
    let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let cfg = ArrayConfig { rows, cols, ..*base };
    let mut state = ArrayState::new(&cfg, params)?;
    for &(r, c, ohm) in cells {
        state
            .set_resistance(r, c, ohm)
            .map_err(|e| parse_err(path, format!("cell ({r}, {c}): {e}")))?;
    }
    Ok((cfg, state))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureRow {
    pub channel: usize,
    pub pulse_ns: f64,
    pub resistance_ohm: f64,
    pub iterations: usize,
}

pub const CAPTURE_HEADER: &[&str] = &["channel", "pulse_ns", "resistance_ohm", "iterations"];

pub fn write_capture<W: Write>(out: W, r: &CaptureResult<f64>) -> Result<()> {
    write_rows(out, capture_rows(r))
}

pub fn capture_rows(r: &CaptureResult<f64>) -> Vec<CaptureRow> {
    (0..r.pulses.len())
        .map(|i| CaptureRow {
            channel: i,
            pulse_ns: r.pulses[i],
            resistance_ohm: r.final_resistances[i],
            iterations: r.iterations[i],
        })
        .collect()
}

pub fn read_capture<R: Read>(input: R, path: &str) -> Result<Vec<CaptureRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    check_header(&mut rdr, path, CAPTURE_HEADER)?;
    rdr.deserialize().map(|r| r.map_err(|e| csv_err(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub lines: usize,
    pub per_line_fj: f64,
    pub stored_fj: f64,
    pub dissipated_fj: f64,
}

impl EnergyRow {
    pub fn new(lines: usize, e: &EnergyReport<f64>) -> Self {
        EnergyRow {
            lines,
            per_line_fj: e.per_line * FJ_PER_J,
            stored_fj: e.stored * FJ_PER_J,
            dissipated_fj: e.dissipated * FJ_PER_J,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub path: String,
    pub kendall_tau: f64,
    pub rms_ns: f64,
    pub max_abs_ns: f64,
    pub span_ns: f64,
    pub effective_bits: f64,
    pub write_energy_fj: f64,
    pub recall_energy_fj: f64,
    pub converged: bool,
    pub window_exceeded: bool,
}

impl MetricsRow {
    pub fn new(path: &str, f: &Fidelity<f64>, capture: &CaptureResult<f64>, recall: &EnergyReport<f64>) -> Self {
        MetricsRow {
            path: path.to_string(),
            kendall_tau: f.kendall_tau,
            rms_ns: f.rms,
            max_abs_ns: f.max_abs,
            span_ns: f.span,
            effective_bits: f.effective_bits,
            write_energy_fj: capture.write_energy * FJ_PER_J,
            recall_energy_fj: recall.total() * FJ_PER_J,
            converged: capture.all_converged(),
            window_exceeded: capture.window_exceeded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n_trials: usize,
    pub rank_exact_rate: f64,
    pub timing_success_rate: f64,
    pub mean_tau: f64,
    pub rms_timing_ns: f64,
    pub effective_bits_mean: f64,
    pub energy_mean_fj: f64,
}

impl From<&TrialReport<f64>> for ReportRow {
    fn from(r: &TrialReport<f64>) -> Self {
        ReportRow {
            n_trials: r.n_trials,
            rank_exact_rate: r.rank_exact_rate,
            timing_success_rate: r.timing_success_rate,
            mean_tau: r.mean_tau,
            rms_timing_ns: r.rms_timing_ns,
            effective_bits_mean: r.effective_bits_mean,
            energy_mean_fj: r.energy_mean_j * FJ_PER_J,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub kendall_tau: f64,
    pub rms_ns: f64,
    pub max_abs_ns: f64,
    pub effective_bits: f64,
    pub write_energy_fj: f64,
    pub recall_energy_fj: f64,
    pub converged: bool,
}

impl From<&TrialRecord<f64>> for TrialRow {
    fn from(r: &TrialRecord<f64>) -> Self {
        TrialRow {
            trial: r.trial,
            kendall_tau: r.kendall_tau,
            rms_ns: r.rms_ns,
            max_abs_ns: r.max_abs_ns,
            effective_bits: r.effective_bits,
            write_energy_fj: r.write_energy_j * FJ_PER_J,
            recall_energy_fj: r.recall_energy_j * FJ_PER_J,
            converged: r.converged,
        }
    }
}

/// Writes any list of serializable rows with a header.
pub fn write_records<W: Write, S: Serialize>(out: W, rows: &[S]) -> Result<()> {
    write_rows(out, rows)
}

/// Reads rows of type `S` back from a headered CSV.
pub fn read_records<R: Read, S: for<'de> Deserialize<'de>>(input: R, path: &str) -> Result<Vec<S>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rdr.deserialize().map(|r| r.map_err(|e| csv_err(path, e))).collect()
}

/// Human-readable companion to the single-row report CSV.
pub fn report_text(
    r: &TrialReport<f64>,
    spec: &crate::variability::VariationSpec,
    channels: usize,
    span_ns: f64,
) -> String {
    let row = ReportRow::from(r);
    format!(
        "[monte_carlo]\n\
         trials = {}\n\
         channels = {channels}\n\
         span_ns = {span_ns}\n\
         d2d_sigma = {}\n\
         c2c_sigma = {}\n\
         seed = {}\n\
         \n\
         [results]\n\
         rank_exact_rate = {}\n\
         timing_success_rate = {}\n\
         mean_tau = {}\n\
         rms_timing_ns = {}\n\
         effective_bits_mean = {}\n\
         energy_mean_fj = {}\n",
        row.n_trials,
        spec.d2d_sigma,
        spec.c2c_sigma,
        spec.seed,
        row.rank_exact_rate,
        row.timing_success_rate,
        row.mean_tau,
        row.rms_timing_ns,
        row.effective_bits_mean,
        row.energy_mean_fj,
    )
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| parse_err(&path.display().to_string(), e.to_string()))
}
