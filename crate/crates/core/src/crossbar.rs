//! 1T1R crossbar state and the RC time-to-threshold recall engine.
//!
//! Recall drives one source line; every bit line charges its capacitor through
//! the selected cell's memristor and fires a digital edge when it crosses
//! `theta * v_read`. The crossing time of a single RC stage is closed form:
//!
//! ```text
//! t_i = R_i * C * ln(1 / (1 - theta)) + t_shifter
//! ```
//!
//! Energy drawn per line is `C * v_read^2` whatever `R_i` is: half ends up on
//! the capacitor, half is burned in the memristor.

use serde::{Deserialize, Serialize};

use crate::device::{initialize_on, DeviceParams, DeviceState};
use crate::error::{domain, invalid, precondition, Result};
use crate::scalar::{ns_per_s, Scalar};
use crate::wavefront::Wavefront;

/// Crossbar geometry, line capacitance, voltages and comparator threshold.
///
/// `c_line` is in farads, voltages in volts, `t_shifter` in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig<T> {
    pub rows: usize,
    pub cols: usize,
    pub c_line: T,
    pub v_read: T,
    pub v_dd: T,
    pub theta: T,
    pub t_shifter: T,
}

impl<T: Scalar> Default for ArrayConfig<T> {
    fn default() -> Self {
        ArrayConfig {
            rows: 4,
            cols: 1,
            c_line: T::lit(1e-12),
            v_read: T::lit(0.7746),
            v_dd: T::lit(1.8),
            theta: T::lit(0.7364),
            t_shifter: T::zero(),
        }
    }
}

impl<T: Scalar> ArrayConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(invalid("array: rows >= 1 and cols >= 1"));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(invalid("array: 0 < theta < 1"));
        }
        if !(self.c_line > T::zero() && self.c_line.is_finite()) {
            return Err(invalid("array: c_line > 0"));
        }
        if !(self.v_read > T::zero() && self.v_read < self.v_dd && self.v_dd.is_finite()) {
            return Err(invalid("array: 0 < v_read < v_dd"));
        }
        if !(self.t_shifter >= T::zero() && self.t_shifter.is_finite()) {
            return Err(invalid("array: t_shifter >= 0"));
        }
        Ok(())
    }

    /// `ln(1 / (1 - theta))`, the number of RC time constants to threshold.
    pub fn ln_factor(&self) -> T {
        -(-self.theta).ln_1p()
    }

    /// Recall delay per ohm of device resistance (ns/Ω) at capacitance `c`.
    pub fn ns_per_ohm(&self, c: T) -> T {
        c * self.ln_factor() * ns_per_s()
    }
}

/// Energy drawn during one recall, in joules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    /// Drawn from the supply by each bit line.
    pub per_line: T,
    /// Left on the bit-line capacitors, summed over lines.
    pub stored: T,
    /// Joule heating in the memristors, summed over lines.
    pub dissipated: T,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn total(&self) -> T {
        self.stored + self.dissipated
    }
}

/// Grid of device states, row-major, with per-device parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayState<T> {
    rows: usize,
    cols: usize,
    devices: Vec<DeviceState<T>>,
    params: Vec<DeviceParams<T>>,
    /// Bit-line voltages; nonzero after a capture until `reset_lines`.
    line_voltage: Vec<T>,
    pub enabled_col: Option<usize>,
}

impl<T: Scalar> ArrayState<T> {
    /// Array of identical devices, all ON, lines discharged.
    pub fn new(cfg: &ArrayConfig<T>, params: &DeviceParams<T>) -> Result<Self> {
        cfg.validate()?;
        Self::with_params(cfg, vec![*params; cfg.rows * cfg.cols])
    }

    /// Array with per-device parameters (row-major).
    pub fn with_params(cfg: &ArrayConfig<T>, params: Vec<DeviceParams<T>>) -> Result<Self> {
        cfg.validate()?;
        if params.len() != cfg.rows * cfg.cols {
            return Err(invalid(format!(
                "parameter grid has {} entries, array is {}x{}",
                params.len(),
                cfg.rows,
                cfg.cols
            )));
        }
        for p in &params {
            p.validate()?;
        }
        Ok(ArrayState {
            rows: cfg.rows,
            cols: cfg.cols,
            devices: params.iter().map(DeviceState::on).collect(),
            params,
            line_voltage: vec![T::zero(); cfg.rows],
            enabled_col: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub(crate) fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.cols {
            return Err(domain(format!(
                "column {col} out of range (array has {} columns)",
                self.cols
            )));
        }
        Ok(())
    }

    pub fn device(&self, row: usize, col: usize) -> &DeviceState<T> {
        &self.devices[self.idx(row, col)]
    }

    pub fn params(&self, row: usize, col: usize) -> &DeviceParams<T> {
        &self.params[self.idx(row, col)]
    }

    pub(crate) fn set_device(&mut self, row: usize, col: usize, state: DeviceState<T>) {
        let i = self.idx(row, col);
        self.devices[i] = state;
    }

    /// Programs one cell directly to resistance `r`.
    pub fn set_resistance(&mut self, row: usize, col: usize, r: T) -> Result<()> {
        if row >= self.rows {
            return Err(domain(format!("row {row} out of range (array has {} rows)", self.rows)));
        }
        self.check_col(col)?;
        let state = DeviceState::with_resistance(r, self.params(row, col))?;
        self.set_device(row, col, state);
        Ok(())
    }

    pub fn column_resistances(&self, col: usize) -> Result<Vec<T>> {
        self.check_col(col)?;
        Ok((0..self.rows).map(|r| self.device(r, col).resistance()).collect())
    }

    /// `(row, col, resistance)` for every cell, row-major.
    pub fn resistance_grid(&self) -> Vec<(usize, usize, T)> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, self.device(r, c).resistance()))
            .collect()
    }

    pub fn line_voltages(&self) -> &[T] {
        &self.line_voltage
    }

    pub(crate) fn set_line_voltage(&mut self, row: usize, v: T) {
        self.line_voltage[row] = v;
    }

    pub fn is_discharged(&self) -> bool {
        self.line_voltage.iter().all(|v| *v == T::zero())
    }

    pub fn column_is_on(&self, col: usize) -> bool {
        (0..self.rows).all(|r| self.device(r, col).is_on())
    }
}

/// Sets every device in `col` to the ON state and enables that column.
pub fn initialize_column<T: Scalar>(mut state: ArrayState<T>, col: usize) -> Result<ArrayState<T>> {
    state.check_col(col)?;
    for row in 0..state.rows {
        let on = initialize_on(*state.device(row, col), state.params(row, col));
        state.set_device(row, col, on);
    }
    state.enabled_col = Some(col);
    Ok(state)
}

/// Reads column `col` out as a wavefront of absolute edge times (ns).
pub fn recall<T: Scalar>(
    state: &ArrayState<T>,
    cfg: &ArrayConfig<T>,
    col: usize,
) -> Result<(Wavefront<T>, EnergyReport<T>)> {
    recall_with_capacitance(state, cfg, col, cfg.c_line)
}

/// Recall with the bit-line capacitance switched to `c_new`; edge times
/// (less `t_shifter`) scale by `c_new / c_line`.
pub fn recall_scaled<T: Scalar>(
    state: &ArrayState<T>,
    cfg: &ArrayConfig<T>,
    col: usize,
    c_new: T,
) -> Result<(Wavefront<T>, EnergyReport<T>)> {
    if !(c_new > T::zero() && c_new.is_finite()) {
        return Err(domain(format!("scale capacitance must be > 0, got {c_new}")));
    }
    recall_with_capacitance(state, cfg, col, c_new)
}

fn recall_with_capacitance<T: Scalar>(
    state: &ArrayState<T>,
    cfg: &ArrayConfig<T>,
    col: usize,
    c: T,
) -> Result<(Wavefront<T>, EnergyReport<T>)> {
    cfg.validate()?;
    if state.rows != cfg.rows || state.cols != cfg.cols {
        return Err(invalid(format!(
            "array state is {}x{} but config says {}x{}",
            state.rows, state.cols, cfg.rows, cfg.cols
        )));
    }
    state.check_col(col)?;
    if !state.is_discharged() {
        return Err(precondition(
            "bit lines must be discharged before recall (run reset_lines)",
        ));
    }
    let k = cfg.ns_per_ohm(c);
    let times = (0..state.rows)
        .map(|row| state.device(row, col).resistance() * k + cfg.t_shifter)
        .collect();
    let per_line = c * cfg.v_read * cfg.v_read;
    let half = per_line * T::from_count(state.rows) * T::lit(0.5);
    Ok((
        Wavefront::new(times)?,
        EnergyReport {
            per_line,
            stored: half,
            dissipated: half,
        },
    ))
}

/// Discharges every line; device states are untouched.
pub fn reset_lines<T: Scalar>(mut state: ArrayState<T>) -> ArrayState<T> {
    state.line_voltage.iter_mut().for_each(|v| *v = T::zero());
    state
}

/// Recalled span between an ON device and one at `r_max`.
pub fn dynamic_range<T: Scalar>(cfg: &ArrayConfig<T>, params: &DeviceParams<T>, r_max: T) -> Result<T> {
    if !(r_max >= params.r_on) {
        return Err(domain(format!("r_max {r_max} below r_on {}", params.r_on)));
    }
    Ok((r_max - params.r_on) * cfg.ns_per_ohm(cfg.c_line))
}

/// Capacitance at which the device's calibrated resistance window recalls
/// over exactly its programming window, so recorded and recalled timescales match.
pub fn matched_capacitance<T: Scalar>(cfg: &ArrayConfig<T>, params: &DeviceParams<T>) -> T {
    params.t_window / (params.r_window * cfg.ln_factor() * ns_per_s())
}

/// Threshold fraction that maps a resistance swing `r_span` onto `span_ns` at capacitance `c`.
pub fn calibrate_theta<T: Scalar>(span_ns: T, r_span: T, c: T) -> Result<T> {
    if !(span_ns > T::zero() && r_span > T::zero() && c > T::zero()) {
        return Err(domain("span, resistance swing and capacitance must all be > 0"));
    }
    let time_constants = span_ns / (r_span * c * ns_per_s());
    Ok(-(-time_constants).exp_m1())
}

/// Read voltage at which each line draws `energy` joules at capacitance `c`.
pub fn calibrate_v_read<T: Scalar>(energy: T, c: T) -> Result<T> {
    if !(energy > T::zero() && c > T::zero()) {
        return Err(domain("energy and capacitance must be > 0"));
    }
    Ok((energy / c).sqrt())
}
