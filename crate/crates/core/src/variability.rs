//! Device-to-device and cycle-to-cycle variation, and the Monte Carlo harness
//! that runs many noisy round trips of one wavefront.
//!
//! Both noise sources are multiplicative lognormal with unit mean and the
//! requested relative standard deviation. Each trial draws from its own
//! ChaCha stream (`seed`, stream = trial index), so a sweep gives the same
//! numbers whether trials run serially or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::{ArrayConfig, ArrayState};
use crate::device::DeviceParams;
use crate::error::{invalid, Result};
use crate::recording::{round_trip, PulseJitter, RoundTripSpec};
use crate::scalar::Scalar;
use crate::wavefront::Wavefront;

/// Timing success threshold: RMS error within half an LSB at 5 bits.
pub const FIVE_BIT_LEVELS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    /// Relative spread of per-device `r_on`.
    pub d2d_sigma: f64,
    /// Relative spread of the stress each programming pulse delivers.
    pub c2c_sigma: f64,
    pub seed: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            d2d_sigma: 0.01,
            c2c_sigma: 0.042,
            seed: 0,
        }
    }
}

impl VariationSpec {
    pub fn noiseless(seed: u64) -> Self {
        VariationSpec {
            d2d_sigma: 0.0,
            c2c_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d2d_sigma >= 0.0 && self.d2d_sigma.is_finite()) {
            return Err(invalid("variation: d2d_sigma >= 0"));
        }
        if !(self.c2c_sigma >= 0.0 && self.c2c_sigma.is_finite()) {
            return Err(invalid("variation: c2c_sigma >= 0"));
        }
        Ok(())
    }
}

/// Unit-mean lognormal with relative standard deviation `rel_sigma`;
/// `None` when the spread is zero so no random numbers are consumed.
pub fn unit_lognormal(rel_sigma: f64) -> Option<LogNormal<f64>> {
    if rel_sigma == 0.0 {
        return None;
    }
    let s2 = (rel_sigma * rel_sigma).ln_1p();
    Some(LogNormal::new(-0.5 * s2, s2.sqrt()).expect("finite lognormal parameters"))
}

/// Deterministic stream for trial `stream` under `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-device parameters with `r_on` scaled by lognormal d2d noise (row-major).
pub fn sample_array<T: Scalar>(
    base: &DeviceParams<T>,
    spec: &VariationSpec,
    rows: usize,
    cols: usize,
) -> Vec<DeviceParams<T>> {
    sample_array_with(base, spec.d2d_sigma, rows, cols, &mut trial_rng(spec.seed, 0))
}

pub fn sample_array_with<T: Scalar, R: rand::Rng>(
    base: &DeviceParams<T>,
    d2d_sigma: f64,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Vec<DeviceParams<T>> {
    let n = rows * cols;
    match unit_lognormal(d2d_sigma) {
        None => vec![*base; n],
        Some(dist) => (0..n)
            .map(|_| DeviceParams {
                r_on: base.r_on * T::lit(dist.sample(rng)),
                ..*base
            })
            .collect(),
    }
}

/// Cycle-to-cycle jitter: each pulse's effective stress-time is scaled by a
/// fresh lognormal factor.
#[derive(Debug, Clone)]
pub struct C2cJitter<R> {
    dist: Option<LogNormal<f64>>,
    rng: R,
}

impl<R: rand::Rng> C2cJitter<R> {
    pub fn new(c2c_sigma: f64, rng: R) -> Self {
        C2cJitter {
            dist: unit_lognormal(c2c_sigma),
            rng,
        }
    }
}

impl<T: Scalar, R: rand::Rng> PulseJitter<T> for C2cJitter<R> {
    fn perturb(&mut self, duration: T) -> T {
        match &self.dist {
            None => duration,
            Some(d) => duration * T::lit(d.sample(&mut self.rng)),
        }
    }
}

/// One draw of cycle-to-cycle noise applied to `duration`.
pub fn perturb_pulse<T: Scalar, R: rand::Rng>(duration: T, spec: &VariationSpec, rng: &mut R) -> T {
    match unit_lognormal(spec.c2c_sigma) {
        None => duration,
        Some(d) => duration * T::lit(d.sample(rng)),
    }
}

/// Everything one Monte Carlo trial needs besides its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub array: ArrayConfig<T>,
    pub device: DeviceParams<T>,
    pub wavefront: Wavefront<T>,
    pub round_trip: RoundTripSpec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<T> {
    pub trial: usize,
    pub kendall_tau: T,
    pub rms_ns: T,
    pub max_abs_ns: T,
    pub effective_bits: T,
    pub write_energy_j: T,
    pub recall_energy_j: T,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialReport<T> {
    pub n_trials: usize,
    /// Fraction of trials whose recalled rank order matches the input exactly.
    pub rank_exact_rate: T,
    /// Fraction of trials with RMS timing error at most span / 64.
    pub timing_success_rate: T,
    pub mean_tau: T,
    /// Mean over trials of the per-trial RMS timing error.
    pub rms_timing_ns: T,
    pub effective_bits_mean: T,
    /// Mean write plus recall energy per trial.
    pub energy_mean_j: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs trial `index` of a sweep.
pub fn run_trial<T: Scalar>(scenario: &Scenario<T>, spec: &VariationSpec, index: usize) -> Result<TrialRecord<T>> {
    let mut rng = trial_rng(spec.seed, index as u64);
    let cfg = &scenario.array;
    let grid = sample_array_with(&scenario.device, spec.d2d_sigma, cfg.rows, cfg.cols, &mut rng);
    let state = ArrayState::with_params(cfg, grid)?;
    let mut jitter = C2cJitter::new(spec.c2c_sigma, rng);
    let (_, rt) = round_trip(
        state,
        cfg,
        &scenario.device,
        &scenario.wavefront,
        &scenario.round_trip,
        &mut jitter,
    )?;
    Ok(TrialRecord {
        trial: index,
        kendall_tau: rt.fidelity.kendall_tau,
        rms_ns: rt.fidelity.rms,
        max_abs_ns: rt.fidelity.max_abs,
        effective_bits: rt.fidelity.effective_bits,
        write_energy_j: rt.capture.write_energy,
        recall_energy_j: rt.recall_energy.total(),
        converged: rt.capture.all_converged(),
    })
}

pub fn monte_carlo<T: Scalar>(
    scenario: &Scenario<T>,
    spec: &VariationSpec,
    n_trials: usize,
    exec: Execution,
) -> Result<(TrialReport<T>, Vec<TrialRecord<T>>)> {
    spec.validate()?;
    if n_trials < 1 {
        return Err(invalid("monte carlo needs at least one trial"));
    }
    let records: Vec<TrialRecord<T>> = match exec {
        Execution::Serial => (0..n_trials)
            .map(|i| run_trial(scenario, spec, i))
            .collect::<Result<_>>()?,
        Execution::Parallel => (0..n_trials)
            .into_par_iter()
            .map(|i| run_trial(scenario, spec, i))
            .collect::<Result<_>>()?,
    };
    let report = summarize(&records, scenario.wavefront.span());
    Ok((report, records))
}

/// Aggregates trial records in index order.
pub fn summarize<T: Scalar>(records: &[TrialRecord<T>], span: T) -> TrialReport<T> {
    let n = T::from_count(records.len());
    let threshold = span / T::lit(FIVE_BIT_LEVELS);
    let mut rank_exact = 0usize;
    let mut timing_ok = 0usize;
    let (mut tau, mut rms, mut bits, mut energy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for r in records {
        if r.kendall_tau == T::one() {
            rank_exact += 1;
        }
        if r.rms_ns <= threshold {
            timing_ok += 1;
        }
        tau = tau + r.kendall_tau;
        rms = rms + r.rms_ns;
        bits = bits + r.effective_bits;
        energy = energy + r.write_energy_j + r.recall_energy_j;
    }
    TrialReport {
        n_trials: records.len(),
        rank_exact_rate: T::from_count(rank_exact) / n,
        timing_success_rate: T::from_count(timing_ok) / n,
        mean_tau: tau / n,
        rms_timing_ns: rms / n,
        effective_bits_mean: bits / n,
        energy_mean_j: energy / n,
    }
}

/// Evenly spaced `channels`-edge wavefront over `span` ns, edges assigned to
/// channels in a fixed interleaved order so rank order is not the identity.
pub fn spread_wavefront<T: Scalar>(channels: usize, span: T) -> Result<Wavefront<T>> {
    if channels == 0 {
        return Err(invalid("wavefront needs at least one channel"));
    }
    if channels == 1 {
        return Wavefront::new(vec![T::zero()]);
    }
    let gap = span / T::from_count(channels - 1);
    // channel c fires in slot (c * stride) mod n, stride coprime with n
    let stride = (1..channels)
        .rev()
        .find(|s| gcd(*s, channels) == 1 && *s * 2 <= channels + 1)
        .unwrap_or(1);
    Wavefront::new(
        (0..channels)
            .map(|c| gap * T::from_count((c * stride) % channels))
            .collect(),
    )
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recording::{round_trip, NoJitter};

    fn rel_std(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        v.sqrt() / m
    }

    fn scenario(channels: usize) -> Scenario<f64> {
        let array = ArrayConfig {
            rows: channels,
            ..ArrayConfig::default()
        };
        let device = DeviceParams::default();
        Scenario {
            array,
            device,
            wavefront: spread_wavefront(channels, 40.0).unwrap(),
            round_trip: RoundTripSpec::native_matched(&array, &device),
        }
    }

    #[test]
    fn zero_sigma_sampling_is_identity() {
        let base = DeviceParams::<f64>::default();
        let grid = sample_array(&base, &VariationSpec::noiseless(3), 4, 3);
        assert!(grid.iter().all(|p| *p == base));
        let mut rng = trial_rng(1, 0);
        assert_eq!(perturb_pulse(12.5, &VariationSpec::noiseless(1), &mut rng), 12.5);
    }

    #[test]
    fn sampling_is_seeded() {
        let base = DeviceParams::<f64>::default();
        let spec = VariationSpec {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(sample_array(&base, &spec, 8, 8), sample_array(&base, &spec, 8, 8));
        let other = VariationSpec { seed: 43, ..spec };
        assert_ne!(sample_array(&base, &spec, 8, 8), sample_array(&base, &other, 8, 8));
    }

    #[test]
    fn d2d_spread_matches_sigma() {
        let base = DeviceParams::<f64>::default();
        let spec = VariationSpec {
            d2d_sigma: 0.01,
            seed: 7,
            ..Default::default()
        };
        let r: Vec<f64> = sample_array(&base, &spec, 100, 100).iter().map(|p| p.r_on).collect();
        let s = rel_std(&r);
        assert!((0.009..=0.011).contains(&s), "relative std {s}");
    }

    #[test]
    fn c2c_spread_matches_sigma() {
        let spec = VariationSpec {
            c2c_sigma: 0.042,
            seed: 9,
            ..Default::default()
        };
        let mut rng = trial_rng(spec.seed, 5);
        let d: Vec<f64> = (0..20_000).map(|_| perturb_pulse(10.0, &spec, &mut rng)).collect();
        let s = rel_std(&d);
        assert!((s - 0.042).abs() < 0.002, "relative std {s}");
        assert_eq!(perturb_pulse(0.0, &spec, &mut rng), 0.0);
    }

    #[test]
    fn noise_free_sweep_collapses_to_round_trip() {
        let sc = scenario(8);
        let (report, records) = monte_carlo(&sc, &VariationSpec::noiseless(11), 5, Execution::Parallel).unwrap();
        let state = ArrayState::new(&sc.array, &sc.device).unwrap();
        let (_, rt) = round_trip(
            state,
            &sc.array,
            &sc.device,
            &sc.wavefront,
            &sc.round_trip,
            &mut NoJitter,
        )
        .unwrap();
        assert_eq!(report.rank_exact_rate, 1.0);
        assert_eq!(report.rms_timing_ns, rt.fidelity.rms);
        assert!(records.iter().all(|r| r.rms_ns == rt.fidelity.rms));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let sc = scenario(8);
        let spec = VariationSpec {
            seed: 5,
            ..Default::default()
        };
        let a = monte_carlo(&sc, &spec, 64, Execution::Serial).unwrap();
        let b = monte_carlo(&sc, &spec, 64, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_trials_and_negative_sigma() {
        let sc = scenario(4);
        assert!(monte_carlo(&sc, &VariationSpec::default(), 0, Execution::Serial).is_err());
        let bad = VariationSpec {
            c2c_sigma: -0.1,
            ..Default::default()
        };
        assert!(monte_carlo(&sc, &bad, 1, Execution::Serial).is_err());
    }

    #[test]
    fn spread_wavefront_shape() {
        let w = spread_wavefront::<f64>(8, 40.0).unwrap();
        let mut t = w.times().to_vec();
        t.sort_by(f64::total_cmp);
        let gap = 40.0 / 7.0;
        for (i, x) in t.iter().enumerate() {
            assert!((x - gap * i as f64).abs() < 1e-12);
        }
        assert_ne!(w.times(), t.as_slice());
        assert_eq!(spread_wavefront::<f64>(1, 40.0).unwrap().times(), &[0.0]);
    }
}
