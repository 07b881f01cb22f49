//! Wavefronts: one event time per channel, plus the rank-order and
//! exact-timing views used to score recall fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Precision reported when the timing error is exactly zero.
pub const EFFECTIVE_BITS_CAP: f64 = 8.0;

/// Single-event-per-wire temporal pattern, times in ns. Channel index is positional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavefront<T> {
    times: Vec<T>,
}

impl<T: Scalar> Wavefront<T> {
    pub fn new(times: Vec<T>) -> Result<Self> {
        if times.is_empty() {
            return Err(domain("wavefront needs at least one channel"));
        }
        if let Some((i, t)) = times
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t >= T::zero()))
        {
            return Err(domain(format!("channel {i}: event time {t} must be finite and >= 0")));
        }
        Ok(Wavefront { times })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn channels(&self) -> usize {
        self.times.len()
    }

    pub fn min(&self) -> T {
        self.times.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.times.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn span(&self) -> T {
        self.max() - self.min()
    }

    /// Index of the first-arriving channel (lowest index on ties).
    pub fn first_channel(&self) -> usize {
        rank_of(self).order[0]
    }

    pub fn in_range(&self, dynamic_range: T) -> bool {
        self.span() <= dynamic_range
    }

    pub fn into_times(self) -> Vec<T> {
        self.times
    }
}

/// Shifts the wavefront so its first event sits at t = 0.
pub fn normalize<T: Scalar>(w: &Wavefront<T>) -> Wavefront<T> {
    let m = w.min();
    Wavefront {
        times: w.times.iter().map(|&t| t - m).collect(),
    }
}

/// Channel indices sorted by ascending event time, ties broken by channel index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankOrder {
    order: Vec<usize>,
}

impl RankOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &c in &order {
            if c >= order.len() || seen[c] {
                return Err(domain(format!("{order:?} is not a permutation")));
            }
            seen[c] = true;
        }
        Ok(RankOrder { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Rank position of each channel.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (rank, &ch) in self.order.iter().enumerate() {
            pos[ch] = rank;
        }
        pos
    }
}

pub fn rank_of<T: Scalar>(w: &Wavefront<T>) -> RankOrder {
    let mut order: Vec<usize> = (0..w.times.len()).collect();
    // stable sort keeps ascending channel index among equal times
    order.sort_by(|&a, &b| w.times[a].partial_cmp(&w.times[b]).expect("finite times"));
    RankOrder { order }
}

/// Kendall rank correlation between two channel orderings.
///
/// A single channel has nothing to disagree on and scores 1.
pub fn kendall_tau<T: Scalar>(a: &RankOrder, b: &RankOrder) -> Result<T> {
    if a.len() != b.len() {
        return Err(domain(format!(
            "rank orders differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Ok(T::one());
    }
    let (pa, pb) = (a.positions(), b.positions());
    let mut net: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let sa = pa[i] < pa[j];
            let sb = pb[i] < pb[j];
            net += if sa == sb { 1 } else { -1 };
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(T::lit(net as f64 / pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingError<T> {
    pub rms: T,
    pub max_abs: T,
}

/// RMS and worst-case per-channel difference after normalizing both wavefronts.
pub fn timing_error<T: Scalar>(a: &Wavefront<T>, b: &Wavefront<T>) -> Result<TimingError<T>> {
    if a.channels() != b.channels() {
        return Err(domain(format!(
            "wavefronts differ in channel count: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    let (na, nb) = (normalize(a), normalize(b));
    let mut sq = T::zero();
    let mut max_abs = T::zero();
    for (&x, &y) in na.times.iter().zip(&nb.times) {
        let d = (x - y).abs();
        sq = sq + d * d;
        max_abs = max_abs.max(d);
    }
    Ok(TimingError {
        rms: (sq / T::from_count(a.channels())).sqrt(),
        max_abs,
    })
}

/// Resolution in bits at which an RMS error of `rms` still counts as half an LSB
/// over `span`: `log2(span / (2 rms))`, capped at [`EFFECTIVE_BITS_CAP`].
///
/// A zero span carries no information; it scores the cap only if the error is
/// also zero, and zero bits otherwise.
pub fn effective_bits<T: Scalar>(span: T, rms: T) -> T {
    let cap = T::lit(EFFECTIVE_BITS_CAP);
    if rms <= T::zero() {
        return cap;
    }
    if span <= T::zero() {
        return T::zero();
    }
    (span / (T::lit(2.0) * rms)).log2().min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn wf(t: &[f64]) -> Wavefront<f64> {
        Wavefront::new(t.to_vec()).unwrap()
    }

    fn ro(o: &[usize]) -> RankOrder {
        RankOrder::new(o.to_vec()).unwrap()
    }

    /// Independent tau: count inversions of b composed with a's inverse by bubble sort.
    fn tau_by_inversions(a: &RankOrder, b: &RankOrder) -> f64 {
        let n = a.len();
        let pb = b.positions();
        let mut seq: Vec<usize> = a.order().iter().map(|&ch| pb[ch]).collect();
        let mut inversions = 0usize;
        for i in 0..n {
            for j in 0..n - 1 - i {
                if seq[j] > seq[j + 1] {
                    seq.swap(j, j + 1);
                    inversions += 1;
                }
            }
        }
        1.0 - 4.0 * inversions as f64 / (n * (n - 1)) as f64
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&wf(&[5.0, 25.0, 45.0])), wf(&[0.0, 20.0, 40.0]));
        assert_eq!(normalize(&wf(&[7.0, 7.0, 7.0])), wf(&[0.0, 0.0, 0.0]));
        assert_eq!(normalize(&wf(&[0.0, 10.0, 40.0])), wf(&[0.0, 10.0, 40.0]));
        assert!(Wavefront::<f64>::new(vec![]).is_err());
        assert!(Wavefront::new(vec![1.0, -1.0]).is_err());
        assert!(Wavefront::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_of(&wf(&[0.0, 20.0, 40.0])).order(), &[0, 1, 2]);
        assert_eq!(rank_of(&wf(&[40.0, 20.0, 0.0])).order(), &[2, 1, 0]);
        assert_eq!(rank_of(&wf(&[5.0, 5.0, 1.0])).order(), &[2, 0, 1]);
        assert!(RankOrder::new(vec![0, 0]).is_err());
        assert!(RankOrder::new(vec![0, 2]).is_err());
    }

    #[test]
    fn tau_examples() {
        let id = ro(&[0, 1, 2]);
        assert_eq!(kendall_tau::<f64>(&id, &id).unwrap(), 1.0);
        assert_eq!(kendall_tau::<f64>(&id, &ro(&[2, 1, 0])).unwrap(), -1.0);
        assert_relative_eq!(
            kendall_tau::<f64>(&id, &ro(&[1, 0, 2])).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(tau_by_inversions(&id, &ro(&[1, 0, 2])), 1.0 / 3.0, max_relative = 1e-15);
        assert!(kendall_tau::<f64>(&id, &ro(&[0, 1])).is_err());
        assert_eq!(kendall_tau::<f64>(&ro(&[0]), &ro(&[0])).unwrap(), 1.0);
    }

    #[test]
    fn timing_error_examples() {
        let e = timing_error(&wf(&[0.0, 10.0]), &wf(&[0.0, 10.0])).unwrap();
        assert_eq!((e.rms, e.max_abs), (0.0, 0.0));
        let e = timing_error(&wf(&[0.0, 10.0]), &wf(&[0.0, 14.0])).unwrap();
        assert_relative_eq!(e.rms, 8.0f64.sqrt(), max_relative = 1e-15);
        assert_eq!(e.max_abs, 4.0);
        let e = timing_error(&wf(&[0.0, 10.0, 20.0]), &wf(&[5.0, 15.0, 25.0])).unwrap();
        assert_eq!((e.rms, e.max_abs), (0.0, 0.0));
        assert!(timing_error(&wf(&[0.0]), &wf(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn effective_bits_examples() {
        assert_relative_eq!(effective_bits(40.0, 0.625), 5.0, max_relative = 1e-15);
        assert_relative_eq!(effective_bits(40.0, 1.25), 4.0, max_relative = 1e-15);
        assert_eq!(effective_bits(40.0, 0.0), 8.0);
        assert_eq!(effective_bits(40.0, 1e-6), 8.0);
        assert_eq!(effective_bits(0.0, 1.0), 0.0);
    }

    fn perm(n: usize) -> impl Strategy<Value = RankOrder> {
        Just((0..n).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(|o| RankOrder::new(o).unwrap())
    }

    proptest! {
        #[test]
        fn tau_matches_inversion_count((a, b) in (2usize..10).prop_flat_map(|n| (perm(n), perm(n)))) {
            let t: f64 = kendall_tau(&a, &b).unwrap();
            prop_assert!((t - tau_by_inversions(&a, &b)).abs() < 1e-12);
            prop_assert_eq!(t, kendall_tau::<f64>(&b, &a).unwrap());
            prop_assert_eq!(kendall_tau::<f64>(&a, &a).unwrap(), 1.0);
        }

        #[test]
        fn normalize_idempotent(times in prop::collection::vec(0.0f64..1e3, 1..12)) {
            let w = wf(&times);
            let n = normalize(&w);
            prop_assert_eq!(normalize(&n), n.clone());
            prop_assert_eq!(n.min(), 0.0);
            prop_assert_eq!(rank_of(&n), rank_of(&w));
        }

        #[test]
        fn rank_survives_monotone_distortion(
            times in prop::collection::vec(0.0f64..100.0, 1..12),
            scale in 0.1f64..10.0,
            knee in 1.0f64..500.0,
        ) {
            // strictly increasing map: logarithmic compression followed by a stretch
            let w = wf(&times);
            let warped = wf(&times.iter().map(|&t| scale * (t / knee).ln_1p()).collect::<Vec<_>>());
            // distinct inputs may collapse only if the map loses resolution; exclude those
            let distinct_in = times.iter().enumerate().all(|(i, a)| times.iter().skip(i + 1).all(|b| (a - b).abs() > 1e-6));
            prop_assume!(distinct_in);
            prop_assert_eq!(rank_of(&w), rank_of(&warped));
        }

        #[test]
        fn timing_error_shift_invariant(times in prop::collection::vec(0.0f64..100.0, 1..8), other in prop::collection::vec(0.0f64..100.0, 8), shift in 0.0f64..1e3) {
            let a = wf(&times);
            let b = wf(&other[..times.len()]);
            let shifted = wf(&times.iter().map(|t| t + shift).collect::<Vec<_>>());
            let e0 = timing_error(&a, &b).unwrap();
            let e1 = timing_error(&shifted, &b).unwrap();
            prop_assert!((e0.rms - e1.rms).abs() < 1e-9);
            prop_assert!((e0.max_abs - e1.max_abs).abs() < 1e-9);
        }
    }
}
