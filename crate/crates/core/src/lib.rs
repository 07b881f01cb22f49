//! Behavioral simulator for a memristive temporal memory.
//!
//! Multi-channel wavefronts (one rising edge per wire) are stored as
//! resistances in a column of a 1T1R crossbar and recalled as timed edges by
//! charging each bit line through its memristor to a comparator threshold.
//!
//! Modules, bottom up:
//!
//! * [`device`]: memristor state and programming dynamics.
//! * [`wavefront`]: the wavefront value type and fidelity metrics.
//! * [`crossbar`]: array state, RC recall and its energy.
//! * [`recording`]: native and digital capture, and full round trips.
//! * [`variability`]: d2d / c2c noise and the Monte Carlo sweep.
//! * [`cli`]: scenario files, CSV formats and the command runner.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.
//!
//! ```
//! use tempmem::recording::{round_trip, NoJitter};
//! use tempmem::{ArrayConfig, ArrayState, DeviceParams, RoundTripSpec, Wavefront};
//!
//! let params = DeviceParams::default();
//! let cfg = ArrayConfig::default();
//! let state = ArrayState::new(&cfg, &params)?;
//! let w = Wavefront::new(vec![0.0, 10.0, 20.0, 40.0])?;
//! let spec = RoundTripSpec::native_matched(&cfg, &params);
//! let (_state, rt) = round_trip(state, &cfg, &params, &w, &spec, &mut NoJitter)?;
//! assert_eq!(rt.fidelity.kendall_tau, 1.0);
//! # Ok::<(), tempmem::Error>(())
//! ```

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crossbar;
pub mod device;
mod error;
pub mod formats;
pub mod recording;
mod scalar;
pub mod variability;
pub mod wavefront;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DeviceParams = device::DeviceParams<f64>;
pub type DeviceState = device::DeviceState<f64>;
pub type Wavefront = wavefront::Wavefront<f64>;
pub type ArrayConfig = crossbar::ArrayConfig<f64>;
pub type ArrayState = crossbar::ArrayState<f64>;
pub type EnergyReport = crossbar::EnergyReport<f64>;
pub type CaptureResult = recording::CaptureResult<f64>;
pub type QuantizerSpec = recording::QuantizerSpec<f64>;
pub type RoundTripSpec = recording::RoundTripSpec<f64>;
pub type RoundTrip = recording::RoundTrip<f64>;
pub type Scenario = variability::Scenario<f64>;
pub type TrialReport = variability::TrialReport<f64>;

pub type DeviceParams32 = device::DeviceParams<f32>;
pub type DeviceState32 = device::DeviceState<f32>;
pub type Wavefront32 = wavefront::Wavefront<f32>;
pub type ArrayConfig32 = crossbar::ArrayConfig<f32>;
pub type ArrayState32 = crossbar::ArrayState<f32>;
pub type EnergyReport32 = crossbar::EnergyReport<f32>;
pub type CaptureResult32 = recording::CaptureResult<f32>;
