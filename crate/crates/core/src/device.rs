//! Behavioral memristor model.
//!
//! A device carries an accumulated programming *stress* `s` (ns of
//! nominal-voltage RESET time). Resistance follows
//!
//! ```text
//! R(s) = r_on + amp_a * ln(1 + s / tau_w)      (clamped at r_off_max)
//! ```
//!
//! which is close to linear while `s << tau_w` and logarithmic beyond it.
//! RESET pulses add stress at a rate `sinh(|v|/v_zero) / sinh(v_write_nominal/v_zero)`;
//! any pulse below `v_prog_threshold` leaves the device untouched.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::scalar::{ns_per_s, Scalar};

/// Programming-dynamics constants of one memristor.
///
/// Units: Ω, ns, V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    pub r_on: T,
    pub r_off_max: T,
    pub amp_a: T,
    pub tau_w: T,
    pub v_prog_threshold: T,
    pub v_zero: T,
    pub v_write_nominal: T,
    /// Resistance swing the device is calibrated to cover within `t_window`.
    pub r_window: T,
    /// Pulse length at nominal write voltage that spans `r_window`.
    pub t_window: T,
}

impl<T: Scalar> Default for DeviceParams<T> {
    /// 10 kΩ ON state calibrated so a 40 ns nominal pulse reaches 40 kΩ.
    fn default() -> Self {
        let base = DeviceParams {
            r_on: T::lit(10e3),
            r_off_max: T::lit(1e6),
            amp_a: T::one(),
            tau_w: T::lit(200.0),
            v_prog_threshold: T::lit(1.0),
            v_zero: T::lit(0.35),
            v_write_nominal: T::lit(1.4),
            r_window: T::lit(30e3),
            t_window: T::lit(40.0),
        };
        calibrate_amp(base.r_window, base.t_window, &base).expect("default calibration")
    }
}

impl<T: Scalar> DeviceParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.r_on,
            self.r_off_max,
            self.amp_a,
            self.tau_w,
            self.v_prog_threshold,
            self.v_zero,
            self.v_write_nominal,
            self.r_window,
            self.t_window,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(invalid("device parameters must be finite"));
        }
        if !(self.r_on > T::zero() && self.r_on < self.r_off_max) {
            return Err(invalid("device: 0 < r_on < r_off_max"));
        }
        if !(self.amp_a > T::zero()) {
            return Err(invalid("device: amp_a > 0"));
        }
        if !(self.tau_w > T::zero()) {
            return Err(invalid("device: tau_w > 0"));
        }
        if !(self.v_prog_threshold > T::zero() && self.v_prog_threshold < self.v_write_nominal) {
            return Err(invalid("device: 0 < v_prog_threshold < v_write_nominal"));
        }
        if !(self.v_zero > T::zero()) {
            return Err(invalid("device: v_zero > 0"));
        }
        if !(self.r_window > T::zero() && self.t_window > T::zero()) {
            return Err(invalid("device: r_window > 0 and t_window > 0"));
        }
        Ok(())
    }

    /// Stress accumulated per ns of pulse at voltage `v`, or zero below threshold.
    ///
    /// Equals exactly one at `v_write_nominal`.
    pub fn stress_rate(&self, v: T) -> T {
        let mag = v.abs();
        if mag < self.v_prog_threshold {
            return T::zero();
        }
        (mag / self.v_zero).sinh() / (self.v_write_nominal / self.v_zero).sinh()
    }

    /// dR/ds at a given stress (Ω per ns of stress), ignoring the clamp.
    pub fn slope_at(&self, stress: T) -> T {
        self.amp_a / (self.tau_w + stress)
    }

    /// Stress needed to reach resistance `r`, the inverse of [`resistance_of`].
    pub fn stress_for(&self, r: T) -> Result<T> {
        if !(r >= self.r_on && r <= self.r_off_max) {
            return Err(domain(format!(
                "resistance {r} outside [{}, {}]",
                self.r_on, self.r_off_max
            )));
        }
        Ok(self.tau_w * ((r - self.r_on) / self.amp_a).exp_m1())
    }
}

/// Resistance at a given accumulated stress.
pub fn resistance_of<T: Scalar>(stress: T, params: &DeviceParams<T>) -> Result<T> {
    if !(stress >= T::zero()) {
        return Err(domain(format!("stress must be >= 0, got {stress}")));
    }
    Ok(resistance_unchecked(stress, params))
}

#[inline]
fn resistance_unchecked<T: Scalar>(stress: T, p: &DeviceParams<T>) -> T {
    let r = p.r_on + p.amp_a * (stress / p.tau_w).ln_1p();
    r.min(p.r_off_max)
}

/// One memristor's programmed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState<T> {
    stress: T,
    resistance: T,
}

impl<T: Scalar> DeviceState<T> {
    /// Fresh device in the ON state.
    pub fn on(params: &DeviceParams<T>) -> Self {
        DeviceState {
            stress: T::zero(),
            resistance: params.r_on,
        }
    }

    pub fn from_stress(stress: T, params: &DeviceParams<T>) -> Result<Self> {
        Ok(DeviceState {
            stress,
            resistance: resistance_of(stress, params)?,
        })
    }

    /// Device programmed to exactly `r` (stress is back-solved).
    pub fn with_resistance(r: T, params: &DeviceParams<T>) -> Result<Self> {
        let stress = params.stress_for(r)?;
        Ok(DeviceState { stress, resistance: r })
    }

    pub fn stress(&self) -> T {
        self.stress
    }

    pub fn resistance(&self) -> T {
        self.resistance
    }

    pub fn is_on(&self) -> bool {
        self.stress == T::zero()
    }
}

/// Applies a voltage pulse across the device.
///
/// Negative `v` (bit line above source line) is the RESET polarity and adds
/// stress; positive `v` above threshold is an ideal SET back to the ON state.
pub fn apply_pulse<T: Scalar>(
    state: DeviceState<T>,
    v: T,
    duration: T,
    params: &DeviceParams<T>,
) -> Result<DeviceState<T>> {
    if !(duration >= T::zero()) {
        return Err(domain(format!("pulse duration must be >= 0, got {duration}")));
    }
    if duration == T::zero() || v.abs() < params.v_prog_threshold {
        return Ok(state);
    }
    if v > T::zero() {
        return Ok(initialize_on(state, params));
    }
    let stress = state.stress + duration * params.stress_rate(v);
    Ok(DeviceState {
        stress,
        resistance: resistance_unchecked(stress, params),
    })
}

/// Ideal SET to the ON state.
pub fn initialize_on<T: Scalar>(_state: DeviceState<T>, params: &DeviceParams<T>) -> DeviceState<T> {
    DeviceState::on(params)
}

/// Returns `params` with `amp_a` chosen so a `t_span` pulse at nominal voltage
/// moves the device from `r_on` to `r_on + r_span`.
pub fn calibrate_amp<T: Scalar>(r_span: T, t_span: T, params: &DeviceParams<T>) -> Result<DeviceParams<T>> {
    if !(r_span > T::zero()) {
        return Err(domain(format!("r_span must be > 0, got {r_span}")));
    }
    if !(t_span > T::zero()) {
        return Err(domain(format!("t_span must be > 0, got {t_span}")));
    }
    Ok(DeviceParams {
        amp_a: r_span / (t_span / params.tau_w).ln_1p(),
        r_window: r_span,
        t_window: t_span,
        ..*params
    })
}

const SIMPSON_INTERVALS: usize = 32;

/// Joule energy (J) dissipated in the device by a constant-voltage pulse,
/// tracking the resistance as stress builds during the pulse.
pub fn pulse_energy<T: Scalar>(state: &DeviceState<T>, v: T, duration: T, params: &DeviceParams<T>) -> T {
    let rate = if v < T::zero() {
        params.stress_rate(v)
    } else {
        T::zero()
    };
    pulse_energy_at_rate(state, v, duration, rate, params)
}

/// As [`pulse_energy`] with an explicit stress accumulation rate, for pulses
/// whose effectiveness deviates from nominal.
pub fn pulse_energy_at_rate<T: Scalar>(
    state: &DeviceState<T>,
    v: T,
    duration: T,
    rate: T,
    params: &DeviceParams<T>,
) -> T {
    if !(duration > T::zero()) || v == T::zero() {
        return T::zero();
    }
    let v2 = v * v;
    let power = |t: T| v2 / resistance_unchecked(state.stress + rate * t, params);
    if rate == T::zero() {
        return power(T::zero()) * duration / ns_per_s();
    }
    // composite Simpson over the pulse
    let n = SIMPSON_INTERVALS;
    let h = duration / T::from_count(n);
    let mut acc = power(T::zero()) + power(duration);
    for k in 1..n {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc = acc + w * power(h * T::from_count(k));
    }
    acc * h / T::lit(3.0) / ns_per_s()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p() -> DeviceParams<f64> {
        DeviceParams::default()
    }

    #[test]
    fn default_calibration() {
        assert_relative_eq!(p().amp_a, 164_544.448_432_412_35, max_relative = 1e-12);
        p().validate().unwrap();
    }

    #[test]
    fn resistance_examples() {
        assert_eq!(resistance_of(0.0, &p()).unwrap(), 10e3);
        assert_relative_eq!(resistance_of(40.0, &p()).unwrap(), 40e3, max_relative = 1e-12);
        assert_relative_eq!(
            resistance_of(20.0, &p()).unwrap(),
            25_682.760_965_896_69,
            max_relative = 1e-12
        );
        assert!(resistance_of(-1.0, &p()).is_err());
        assert!(resistance_of(f64::NAN, &p()).is_err());
    }

    #[test]
    fn resistance_clamps() {
        assert_eq!(resistance_of(1e12, &p()).unwrap(), 1e6);
    }

    #[test]
    fn nominal_pulse() {
        let s = apply_pulse(DeviceState::on(&p()), -1.4, 20.0, &p()).unwrap();
        assert_eq!(s.stress(), 20.0);
        assert_relative_eq!(s.resistance(), 25_682.760_965_896_69, max_relative = 1e-12);
    }

    #[test]
    fn read_and_zero_pulses_do_nothing() {
        let s = DeviceState::from_stress(37.0, &p()).unwrap();
        assert_eq!(apply_pulse(s, -0.77, 100.0, &p()).unwrap(), s);
        assert_eq!(apply_pulse(s, 0.77, 100.0, &p()).unwrap(), s);
        let on = DeviceState::on(&p());
        assert_eq!(apply_pulse(on, -1.4, 0.0, &p()).unwrap(), on);
        assert_eq!(apply_pulse(on, 1.8, 0.0, &p()).unwrap(), on);
        assert!(apply_pulse(on, -1.4, -1.0, &p()).is_err());
    }

    #[test]
    fn set_pulse_reinitializes() {
        let s = DeviceState::from_stress(500.0, &p()).unwrap();
        let s = apply_pulse(s, 1.4, 1.0, &p()).unwrap();
        assert!(s.is_on());
        assert_eq!(s.resistance(), 10e3);
    }

    #[test]
    fn initialize_on_examples() {
        let s = DeviceState::from_stress(500.0, &p()).unwrap();
        let s = initialize_on(s, &p());
        assert_eq!(s.stress(), 0.0);
        assert_eq!(initialize_on(s, &p()), s);
        assert_eq!(resistance_of(s.stress(), &p()).unwrap(), 10e3);
    }

    #[test]
    fn stress_rate_voltage_shape() {
        assert_eq!(p().stress_rate(-1.4), 1.0);
        assert_eq!(p().stress_rate(-0.99), 0.0);
        // sinh(1/0.35)/sinh(4)
        assert_relative_eq!(p().stress_rate(-1.0), 0.317_961_306_344_428_2, max_relative = 1e-12);
    }

    #[test]
    fn calibrate_amp_examples() {
        let c = calibrate_amp(30e3, 40.0, &p()).unwrap();
        assert_relative_eq!(c.amp_a, 164_544.448_432_412_35, max_relative = 1e-12);
        assert!(calibrate_amp(0.0, 40.0, &p()).is_err());
        assert!(calibrate_amp(-1.0, 40.0, &p()).is_err());
        assert!(calibrate_amp(30e3, 0.0, &p()).is_err());

        let wide = DeviceParams { tau_w: 1e6, ..p() };
        let c = calibrate_amp(30e3, 40.0, &wide).unwrap();
        assert_relative_eq!(c.amp_a, 750_014_999.899_251_9, max_relative = 1e-9);
        // near-perfectly linear over the window
        for t in [5.0, 10.0, 20.0, 30.0] {
            let r = resistance_of(t, &c).unwrap();
            let lin = 10e3 + 750.0 * t;
            assert!((r - lin).abs() / 30e3 < 1e-4);
        }
    }

    #[test]
    fn stress_for_inverts() {
        for r in [10e3, 20e3, 30e3, 40e3] {
            let s = DeviceState::with_resistance(r, &p()).unwrap();
            assert_relative_eq!(resistance_of(s.stress(), &p()).unwrap(), r, max_relative = 1e-12);
        }
        assert!(p().stress_for(9e3).is_err());
    }

    #[test]
    fn energy_of_constant_resistance_pulse() {
        // below threshold the resistance is fixed: E = v^2 t / R
        let on = DeviceState::on(&p());
        let e = pulse_energy(&on, -0.5, 10.0, &p());
        assert_relative_eq!(e, 0.25 * 10e-9 / 10e3, max_relative = 1e-12);
        assert_eq!(pulse_energy(&on, -1.4, 0.0, &p()), 0.0);
    }

    #[test]
    fn energy_matches_fine_trapezoid() {
        let on = DeviceState::on(&p());
        let params = p();
        let e = pulse_energy(&on, -1.4, 40.0, &params);
        // independent reference: 40k-step trapezoid on the closed-form R(s)
        let n = 40_000;
        let h = 40.0 / n as f64;
        let pw = |t: f64| 1.96 / (10e3 + params.amp_a * (t / 200.0f64).ln_1p());
        let mut acc = 0.5 * (pw(0.0) + pw(40.0));
        for k in 1..n {
            acc += pw(k as f64 * h);
        }
        let reference = acc * h * 1e-9;
        assert_relative_eq!(e, reference, max_relative = 1e-8);
    }

    #[test]
    fn log_compression_and_window() {
        let incs = |ts: [f64; 5]| -> Vec<f64> {
            ts.windows(2)
                .map(|w| resistance_of(w[1], &p()).unwrap() - resistance_of(w[0], &p()).unwrap())
                .collect()
        };
        let long = incs([0.0, 100.0, 200.0, 300.0, 400.0]);
        assert!(long.windows(2).all(|w| w[1] < w[0]));
        let short = incs([0.0, 10.0, 20.0, 30.0, 40.0]);
        assert!(short.windows(2).all(|w| w[1] < w[0]));
        for d in short {
            assert!((d - 7_500.0).abs() / 7_500.0 <= 0.10);
        }
    }

    #[test]
    fn f32_model() {
        let p32 = DeviceParams::<f32>::default();
        let r = resistance_of(20.0f32, &p32).unwrap();
        assert!((r - 25_682.76).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn monotone_in_stress(a in 0.0f64..5e4, b in 0.0f64..5e4) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let params = p();
            let (rl, rh) = (resistance_of(lo, &params).unwrap(), resistance_of(hi, &params).unwrap());
            if rl < params.r_off_max {
                prop_assert!(rh > rl);
            } else {
                prop_assert_eq!(rh, params.r_off_max);
            }
        }

        #[test]
        fn stress_is_additive(s0 in 0.0f64..100.0, a in 0.0f64..100.0, b in 0.0f64..100.0, v in -1.8f64..-1.0) {
            let params = p();
            let st = DeviceState::from_stress(s0, &params).unwrap();
            let two = apply_pulse(apply_pulse(st, v, a, &params).unwrap(), v, b, &params).unwrap();
            let one = apply_pulse(st, v, a + b, &params).unwrap();
            prop_assert!((two.stress() - one.stress()).abs() <= 1e-12 * (1.0 + one.stress()));
        }

        #[test]
        fn stress_is_exactly_additive_on_dyadic_grid(s0 in 0u32..1 << 16, a in 0u32..1 << 16, b in 0u32..1 << 16) {
            // multiples of 1/1024 ns add without rounding at the nominal voltage
            let q = |k: u32| k as f64 / 1024.0;
            let params = p();
            let st = DeviceState::from_stress(q(s0), &params).unwrap();
            let two = apply_pulse(apply_pulse(st, -1.4, q(a), &params).unwrap(), -1.4, q(b), &params).unwrap();
            let one = apply_pulse(st, -1.4, q(a) + q(b), &params).unwrap();
            prop_assert_eq!(two, one);
        }

        #[test]
        fn near_linear_within_window(t in 0.0f64..=40.0) {
            let params = p();
            let r = resistance_of(t, &params).unwrap();
            let lin = params.r_on + params.r_window / params.t_window * t;
            prop_assert!((r - lin).abs() / params.r_window <= 0.10);
        }

        #[test]
        fn sub_threshold_pulses_are_bit_identical(s in 0.0f64..1e3, v in -0.999f64..0.999, d in 0.0f64..1e4) {
            let params = p();
            let st = DeviceState::from_stress(s, &params).unwrap();
            prop_assert_eq!(apply_pulse(st, v, d, &params).unwrap(), st);
        }
    }
}
