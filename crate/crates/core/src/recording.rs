//! Wavefront capture into a crossbar column.
//!
//! Two paths are provided:
//!
//! * **Native**: the first-arriving edge raises the source line to the write
//!   level. Every later bit line stays low until its own edge, so its device
//!   sees a reverse `v_write` for exactly `t_i - t_first`. The first device sees
//!   no voltage at all.
//! * **Digital**: the edges are time-stamped by a counter (optionally refined by
//!   a vernier stage), turned into resistance targets, and written with a
//!   RESET-only program/verify loop.
//!
//! [`round_trip`] strings capture, line reset and recall together and scores
//! the recalled wavefront against the input.

use serde::{Deserialize, Serialize};

use crate::crossbar::{
    initialize_column, matched_capacitance, recall_scaled, reset_lines, ArrayConfig, ArrayState, EnergyReport,
};
use crate::device::{apply_pulse, pulse_energy_at_rate, DeviceParams};
use crate::error::{domain, invalid, precondition, Result};
use crate::scalar::Scalar;
use crate::wavefront::{effective_bits, kendall_tau, normalize, rank_of, timing_error, Wavefront};

/// Source of cycle-to-cycle variation in how much stress a pulse delivers.
pub trait PulseJitter<T> {
    /// Effective stress-time delivered by a pulse of nominal `duration`.
    fn perturb(&mut self, duration: T) -> T;
}

/// Every pulse delivers exactly its nominal stress.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoJitter;

impl<T> PulseJitter<T> for NoJitter {
    fn perturb(&mut self, duration: T) -> T {
        duration
    }
}

/// Outcome of writing one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureResult<T> {
    /// Total reverse-pulse time applied to each channel's device (ns).
    pub pulses: Vec<T>,
    pub final_resistances: Vec<T>,
    /// Joule energy dissipated in the devices while programming (J).
    pub write_energy: T,
    /// Program/verify cycles per channel; 1 for every native capture.
    pub iterations: Vec<usize>,
    /// Per-channel convergence; always true on the native path.
    pub converged: Vec<bool>,
    /// Native path only: input span exceeded the device's linear window.
    pub window_exceeded: bool,
}

impl<T> CaptureResult<T> {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerKind {
    Counter,
    Vernier,
}

/// Time-to-digital stage that time-stamps each edge relative to the first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec<T> {
    pub kind: QuantizerKind,
    /// Counter period (ns).
    pub t_clk: T,
    /// Vernier resolution (ns); ignored by a plain counter.
    pub t_fine: T,
}

impl<T: Scalar> QuantizerSpec<T> {
    pub fn counter(t_clk: T) -> Self {
        QuantizerSpec {
            kind: QuantizerKind::Counter,
            t_clk,
            t_fine: t_clk,
        }
    }

    pub fn vernier(t_clk: T, t_fine: T) -> Self {
        QuantizerSpec {
            kind: QuantizerKind::Vernier,
            t_clk,
            t_fine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_clk > T::zero() && self.t_clk.is_finite()) {
            return Err(invalid("quantizer: t_clk > 0"));
        }
        if self.kind == QuantizerKind::Vernier && !(self.t_fine > T::zero() && self.t_fine < self.t_clk) {
            return Err(invalid("quantizer: 0 < t_fine < t_clk"));
        }
        Ok(())
    }

    /// Count expressed in clock periods (fractional for vernier).
    pub fn clocks(&self, count: Count) -> T {
        let coarse = T::lit(count.coarse as f64);
        match self.kind {
            QuantizerKind::Counter => coarse,
            QuantizerKind::Vernier => coarse + T::lit(count.fine as f64) * self.t_fine / self.t_clk,
        }
    }

    /// Lower edge of the time bin a count stands for (ns after the first edge).
    pub fn time_of(&self, count: Count) -> T {
        self.clocks(count) * self.t_clk
    }
}

/// Register-bank entry for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Count {
    pub coarse: u64,
    /// Vernier refinement in units of `t_fine`; zero for a counter.
    pub fine: u64,
}

// Floor that treats values within a few ulps below an integer as that integer,
// so decimal inputs such as 9.7 ns land in the bin a hand calculation expects.
fn snapped_floor<T: Scalar>(x: T) -> T {
    let r = x.round();
    let tol = T::epsilon() * T::lit(1024.0) * x.abs().max(T::one());
    if (x - r).abs() <= tol {
        r
    } else {
        x.floor()
    }
}

/// Time-stamps every edge relative to the first-arriving one (floor semantics).
pub fn quantize<T: Scalar>(w: &Wavefront<T>, q: &QuantizerSpec<T>) -> Result<Vec<Count>> {
    q.validate()?;
    let to_u64 = |x: T| x.max(T::zero()).to_u64().expect("count fits in u64");
    Ok(normalize(w)
        .times()
        .iter()
        .map(|&t| {
            let coarse = snapped_floor(t / q.t_clk).max(T::zero());
            let fine = match q.kind {
                QuantizerKind::Counter => T::zero(),
                QuantizerKind::Vernier => {
                    let residue = t - coarse * q.t_clk;
                    let max_fine = (q.t_clk / q.t_fine).ceil() - T::one();
                    snapped_floor(residue / q.t_fine).max(T::zero()).min(max_fine)
                }
            };
            Count {
                coarse: to_u64(coarse),
                fine: to_u64(fine),
            }
        })
        .collect())
}

fn check_capture_inputs<T: Scalar>(state: &ArrayState<T>, col: usize, channels: usize, v_write: T) -> Result<()> {
    state.check_col(col)?;
    if channels != state.rows() {
        return Err(domain(format!(
            "wavefront has {channels} channels but the array has {} bit lines",
            state.rows()
        )));
    }
    if !state.column_is_on(col) {
        return Err(precondition(format!(
            "column {col} must be initialized to the ON state before capture"
        )));
    }
    for row in 0..state.rows() {
        let p = state.params(row, col);
        if !(v_write >= p.v_prog_threshold) {
            return Err(domain(format!(
                "write voltage {v_write} V is below the programming threshold {} V",
                p.v_prog_threshold
            )));
        }
    }
    Ok(())
}

/// Native (STDP-like) capture of `w` into column `col`.
pub fn capture_native<T: Scalar>(
    state: ArrayState<T>,
    col: usize,
    w: &Wavefront<T>,
    v_write: T,
) -> Result<(ArrayState<T>, CaptureResult<T>)> {
    capture_native_with(state, col, w, v_write, &mut NoJitter)
}

/// [`capture_native`] with cycle-to-cycle pulse variation.
pub fn capture_native_with<T: Scalar, J: PulseJitter<T>>(
    mut state: ArrayState<T>,
    col: usize,
    w: &Wavefront<T>,
    v_write: T,
    jitter: &mut J,
) -> Result<(ArrayState<T>, CaptureResult<T>)> {
    check_capture_inputs(&state, col, w.channels(), v_write)?;
    let rel = normalize(w);
    let reverse = -v_write;
    let mut pulses = Vec::with_capacity(w.channels());
    let mut finals = Vec::with_capacity(w.channels());
    let mut energy = T::zero();
    let mut window_exceeded = false;

    for (row, &d) in rel.times().iter().enumerate() {
        let params = *state.params(row, col);
        window_exceeded |= d > params.t_window;
        let before = *state.device(row, col);
        let effective = if d > T::zero() { jitter.perturb(d) } else { d };
        let after = apply_pulse(before, reverse, effective, &params)?;
        if d > T::zero() {
            let rate = params.stress_rate(reverse) * effective / d;
            energy = energy + pulse_energy_at_rate(&before, reverse, d, rate, &params);
        }
        state.set_device(row, col, after);
        // bit line was driven to the write level by its edge
        state.set_line_voltage(row, v_write);
        pulses.push(d);
        finals.push(after.resistance());
    }
    state.enabled_col = Some(col);
    let n = pulses.len();
    Ok((
        state,
        CaptureResult {
            pulses,
            final_resistances: finals,
            write_energy: energy,
            iterations: vec![1; n],
            converged: vec![true; n],
            window_exceeded,
        },
    ))
}

/// Settings of the RESET-only program/verify loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramSpec<T> {
    /// Relative tolerance `|R - target| / target`.
    pub tol: T,
    pub v_write: T,
    /// Nominal length of each programming pulse (ns).
    pub step: T,
    pub max_iters: usize,
}

impl<T: Scalar> ProgramSpec<T> {
    /// Step short enough that one pulse never moves a device by more than
    /// `tol * r_on`, with twice the iterations needed to sweep the full window.
    pub fn for_tolerance(tol: T, v_write: T, params: &DeviceParams<T>) -> Result<Self> {
        if !(tol > T::zero() && tol < T::one()) {
            return Err(domain(format!("tolerance must be in (0, 1), got {tol}")));
        }
        let rate = params.stress_rate(-v_write);
        if !(rate > T::zero()) {
            return Err(domain(format!("write voltage {v_write} V cannot program the device")));
        }
        let step = tol * params.r_on / (params.slope_at(T::zero()) * rate);
        let needed = params.t_window / (step * rate);
        let max_iters = (needed * T::lit(2.0)).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        Ok(ProgramSpec {
            tol,
            v_write,
            step,
            max_iters,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero() && self.step > T::zero() && self.v_write > T::zero()) {
            return Err(invalid("program: tol, step and v_write must be > 0"));
        }
        Ok(())
    }
}

/// Writes per-channel resistance `targets` into `col` by repeated RESET pulses
/// and verify reads. Never pulses a device already within tolerance and stops a
/// channel once it overshoots, since the loop cannot move resistance down.
pub fn program_closed_loop<T: Scalar, J: PulseJitter<T>>(
    mut state: ArrayState<T>,
    col: usize,
    targets: &[T],
    prog: &ProgramSpec<T>,
    jitter: &mut J,
) -> Result<(ArrayState<T>, CaptureResult<T>)> {
    prog.validate()?;
    check_capture_inputs(&state, col, targets.len(), prog.v_write)?;
    if let Some(t) = targets.iter().find(|t| !(t.is_finite() && **t > T::zero())) {
        return Err(domain(format!("resistance target {t} must be finite and > 0")));
    }
    let reverse = -prog.v_write;
    let n = targets.len();
    let mut result = CaptureResult {
        pulses: vec![T::zero(); n],
        final_resistances: Vec::with_capacity(n),
        write_energy: T::zero(),
        iterations: vec![0; n],
        converged: vec![false; n],
        window_exceeded: false,
    };

    for (row, &target) in targets.iter().enumerate() {
        let params = *state.params(row, col);
        let nominal_rate = params.stress_rate(reverse);
        let band = prog.tol * target;
        let mut dev = *state.device(row, col);
        let mut ok = (dev.resistance() - target).abs() <= band;
        let mut iters = 0;
        while !ok && iters < prog.max_iters && dev.resistance() < target {
            let effective = jitter.perturb(prog.step);
            let rate = nominal_rate * effective / prog.step;
            result.write_energy = result.write_energy + pulse_energy_at_rate(&dev, reverse, prog.step, rate, &params);
            dev = apply_pulse(dev, reverse, effective, &params)?;
            result.pulses[row] = result.pulses[row] + prog.step;
            iters += 1;
            // verify read at v_read is below threshold and leaves the device as is
            ok = (dev.resistance() - target).abs() <= band;
        }
        state.set_device(row, col, dev);
        state.set_line_voltage(row, prog.v_write);
        result.final_resistances.push(dev.resistance());
        result.iterations[row] = iters;
        result.converged[row] = ok;
    }
    state.enabled_col = Some(col);
    Ok((state, result))
}

/// Resistance step per count that maps the device's calibrated window onto
/// its programming window at clock period `t_clk`.
pub fn default_slope<T: Scalar>(params: &DeviceParams<T>, t_clk: T) -> T {
    params.r_window / (params.t_window / t_clk)
}

/// Digital capture: quantize, convert counts to targets `r_on + slope * clocks`,
/// then program/verify.
#[allow(clippy::too_many_arguments)]
pub fn capture_digital<T: Scalar, J: PulseJitter<T>>(
    state: ArrayState<T>,
    params: &DeviceParams<T>,
    col: usize,
    w: &Wavefront<T>,
    q: &QuantizerSpec<T>,
    slope: T,
    prog: &ProgramSpec<T>,
    jitter: &mut J,
) -> Result<(ArrayState<T>, CaptureResult<T>)> {
    if !(slope > T::zero() && slope.is_finite()) {
        return Err(domain(format!("slope must be > 0, got {slope}")));
    }
    let targets = digital_targets(w, q, params.r_on, slope)?;
    program_closed_loop(state, col, &targets, prog, jitter)
}

pub fn digital_targets<T: Scalar>(w: &Wavefront<T>, q: &QuantizerSpec<T>, r_on: T, slope: T) -> Result<Vec<T>> {
    Ok(quantize(w, q)?
        .into_iter()
        .map(|c| r_on + slope * q.clocks(c))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapturePath<T> {
    Native,
    Digital {
        quantizer: QuantizerSpec<T>,
        /// Ω per count.
        slope: T,
        tol: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSpec<T> {
    pub col: usize,
    pub v_write: T,
    pub path: CapturePath<T>,
    /// Recall capacitance (F); `None` recalls at the configured `c_line`.
    pub scale_cap: Option<T>,
}

impl<T: Scalar> RoundTripSpec<T> {
    /// Native path at nominal write voltage, recalled at the window-matched capacitance.
    pub fn native_matched(cfg: &ArrayConfig<T>, params: &DeviceParams<T>) -> Self {
        RoundTripSpec {
            col: 0,
            v_write: params.v_write_nominal,
            path: CapturePath::Native,
            scale_cap: Some(matched_capacitance(cfg, params)),
        }
    }

    /// Digital counter path with the default slope, matched recall capacitance.
    pub fn digital_matched(
        cfg: &ArrayConfig<T>,
        params: &DeviceParams<T>,
        quantizer: QuantizerSpec<T>,
        tol: T,
    ) -> Self {
        RoundTripSpec {
            col: 0,
            v_write: params.v_write_nominal,
            path: CapturePath::Digital {
                quantizer,
                slope: default_slope(params, quantizer.t_clk),
                tol,
            },
            scale_cap: Some(matched_capacitance(cfg, params)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelity<T> {
    pub kendall_tau: T,
    pub rms: T,
    pub max_abs: T,
    /// Span of the normalized input (ns).
    pub span: T,
    pub effective_bits: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip<T> {
    /// Normalized input.
    pub input: Wavefront<T>,
    /// Normalized recalled wavefront.
    pub output: Wavefront<T>,
    pub capture: CaptureResult<T>,
    pub fidelity: Fidelity<T>,
    pub recall_energy: EnergyReport<T>,
}

pub fn fidelity<T: Scalar>(input: &Wavefront<T>, output: &Wavefront<T>) -> Result<Fidelity<T>> {
    let err = timing_error(input, output)?;
    let span = input.span();
    Ok(Fidelity {
        kendall_tau: kendall_tau(&rank_of(input), &rank_of(output))?,
        rms: err.rms,
        max_abs: err.max_abs,
        span,
        effective_bits: effective_bits(span, err.rms),
    })
}

/// Initialize, capture, reset, recall and score one wavefront.
///
/// `params` are the nominal device parameters the digital path designs its
/// targets and step size around; the array may hold per-device variants.
pub fn round_trip<T: Scalar, J: PulseJitter<T>>(
    state: ArrayState<T>,
    cfg: &ArrayConfig<T>,
    params: &DeviceParams<T>,
    w: &Wavefront<T>,
    spec: &RoundTripSpec<T>,
    jitter: &mut J,
) -> Result<(ArrayState<T>, RoundTrip<T>)> {
    let state = initialize_column(state, spec.col)?;
    let (state, capture) = match spec.path {
        CapturePath::Native => capture_native_with(state, spec.col, w, spec.v_write, jitter)?,
        CapturePath::Digital { quantizer, slope, tol } => {
            let prog = ProgramSpec::for_tolerance(tol, spec.v_write, params)?;
            capture_digital(state, params, spec.col, w, &quantizer, slope, &prog, jitter)?
        }
    };
    let state = reset_lines(state);
    let c = spec.scale_cap.unwrap_or(cfg.c_line);
    let (recalled, recall_energy) = recall_scaled(&state, cfg, spec.col, c)?;
    let input = normalize(w);
    let output = normalize(&recalled);
    let fidelity = fidelity(&input, &output)?;
    Ok((
        state,
        RoundTrip {
            input,
            output,
            capture,
            fidelity,
            recall_energy,
        },
    ))
}
