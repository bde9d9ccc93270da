//! Two-way partition statistics of a distribution.
//!
//! Both quantities are driven by the subset whose mass is closest to 1/2:
//! `pi = max_A min(p(A), 1 - p(A))` and `lambda = max_A p(A) p(A^c)`.
//! Three strategies are used, in order of preference:
//!
//! * counts-backed vectors: subset-sum reachability over the integer counts
//!   (exact, bitset of `total / 2` bits);
//! * at most [`EXHAUSTIVE_MAX_SUPPORT`] positive entries: enumeration of
//!   every subset by meet-in-the-middle (exact);
//! * otherwise Karmarkar-Karp differencing, which realises an actual
//!   partition and therefore gives a lower bound on both quantities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::dist::{ProbVec, SUPPORT_EPS};

/// Exhaustive enumeration cutoff (2^24 subsets).
pub const EXHAUSTIVE_MAX_SUPPORT: usize = 24;

/// Largest count total handled by the subset-sum bitset.
pub const COUNT_DP_MAX_TOTAL: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionStats {
    /// `max_A min(p(A), 1 - p(A))`, at most 1/2.
    pub pi: f64,
    /// `max_A p(A) p(A^c)`, at most 1/4.
    pub lambda_max: f64,
    /// False when the value came from the differencing heuristic.
    pub exact: bool,
}

impl PartitionStats {
    fn from_mass(mass: f64, total: f64, exact: bool) -> Self {
        let rest = total - mass;
        Self {
            pi: mass.min(rest).max(0.0),
            lambda_max: (mass * rest).max(0.0),
            exact,
        }
    }
}

pub fn partition_stats(p: &ProbVec) -> PartitionStats {
    let st = raw_stats(p);
    // float sums of a normalised vector can overshoot 1 by an ulp
    PartitionStats {
        pi: st.pi.min(0.5),
        lambda_max: st.lambda_max.min(0.25),
        exact: st.exact,
    }
}

fn raw_stats(p: &ProbVec) -> PartitionStats {
    if let Some(counts) = p.counts() {
        if p.total() <= COUNT_DP_MAX_TOTAL {
            return from_counts(counts);
        }
    }
    let weights: Vec<f64> = p
        .probs()
        .iter()
        .copied()
        .filter(|&w| w > SUPPORT_EPS)
        .collect();
    if weights.len() <= EXHAUSTIVE_MAX_SUPPORT {
        exhaustive(&weights)
    } else {
        differencing(&weights)
    }
}

/// Exact statistics by enumerating all subsets of `weights`.
///
/// # Panics
/// If `weights.len()` exceeds [`EXHAUSTIVE_MAX_SUPPORT`].
pub fn exhaustive(weights: &[f64]) -> PartitionStats {
    assert!(
        weights.len() <= EXHAUSTIVE_MAX_SUPPORT,
        "exhaustive partition search over {} entries",
        weights.len()
    );
    let total: f64 = weights.iter().sum();
    if weights.is_empty() {
        return PartitionStats::from_mass(0.0, total, true);
    }
    let (left, right) = weights.split_at(weights.len() / 2);
    let left_sums = subset_sums(left);
    let right_sums = subset_sums(right);
    let half = total / 2.0;
    let mut best = 0.0;
    let mut best_gap = f64::INFINITY;
    for &a in &left_sums {
        for &b in &right_sums {
            let mass = a + b;
            let gap = (mass - half).abs();
            if gap < best_gap {
                best_gap = gap;
                best = mass;
            }
        }
    }
    PartitionStats::from_mass(best, total, true)
}

fn subset_sums(weights: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; 1 << weights.len()];
    for mask in 1..sums.len() {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + weights[low];
    }
    sums
}

#[derive(PartialEq)]
struct Weight(f64);

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Karmarkar-Karp largest differencing. Never exceeds the exact values.
pub fn differencing(weights: &[f64]) -> PartitionStats {
    let total: f64 = weights.iter().sum();
    let mut heap: BinaryHeap<Weight> = weights.iter().map(|&w| Weight(w)).collect();
    while heap.len() > 1 {
        let a = heap.pop().unwrap().0;
        let b = heap.pop().unwrap().0;
        heap.push(Weight(a - b));
    }
    let diff = heap.pop().map_or(0.0, |w| w.0);
    // The final difference is realised by a concrete two-way split.
    PartitionStats::from_mass((total - diff) / 2.0, total, false)
}

/// Exact statistics from integer counts by subset-sum reachability.
pub fn from_counts(counts: &[u64]) -> PartitionStats {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return PartitionStats::from_mass(0.0, 0.0, true);
    }
    let half = (total / 2) as usize;
    let words = half / 64 + 1;
    let mut reach = vec![0u64; words];
    reach[0] = 1;
    for &c in counts {
        let c = c as usize;
        if c == 0 || c > half {
            continue;
        }
        shift_or(&mut reach, c);
    }
    let mut best = 0usize;
    for s in (0..=half).rev() {
        if reach[s / 64] >> (s % 64) & 1 == 1 {
            best = s;
            break;
        }
    }
    let t = total as f64;
    let mass = best as f64 / t;
    let rest = (total - best as u64) as f64 / t;
    PartitionStats {
        pi: mass.min(rest),
        lambda_max: mass * rest,
        exact: true,
    }
}

/// `bits |= bits << shift`, truncated to the buffer length.
fn shift_or(bits: &mut [u64], shift: usize) {
    let word_shift = shift / 64;
    let bit_shift = shift % 64;
    for i in (word_shift..bits.len()).rev() {
        let src = i - word_shift;
        let mut v = bits[src] << bit_shift;
        if bit_shift != 0 && src > 0 {
            v |= bits[src - 1] >> (64 - bit_shift);
        }
        bits[i] |= v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVec {
        ProbVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn balanced_subset_reaches_half() {
        let st = pv(&[0.5, 0.3, 0.2]).partition_stats();
        assert!(st.exact);
        assert!((st.pi - 0.5).abs() < 1e-15);
        assert!((st.lambda_max - 0.25).abs() < 1e-15);
    }

    #[test]
    fn three_atoms_by_enumeration() {
        // Subsets of (0.6, 0.3, 0.1): masses 0, .1, .3, .4, .6, .7, .9, 1.
        // Closest to 1/2 is 0.4 (or 0.6): pi = 0.4, lambda = 0.24.
        let st = pv(&[0.6, 0.3, 0.1]).partition_stats();
        assert!((st.pi - 0.4).abs() < 1e-15);
        assert!((st.lambda_max - 0.24).abs() < 1e-15);
    }

    #[test]
    fn dirac_has_no_split() {
        let st = ProbVec::dirac(4, 1).unwrap().partition_stats();
        assert_eq!(st.pi, 0.0);
        assert_eq!(st.lambda_max, 0.0);
        let st = ProbVec::from_counts(vec![0, 9, 0]).unwrap().partition_stats();
        assert_eq!(st.pi, 0.0);
        assert_eq!(st.lambda_max, 0.0);
    }

    #[test]
    fn counts_dp_matches_enumeration() {
        let counts = vec![7u64, 3, 11, 1, 0, 5, 2];
        let p = ProbVec::from_counts(counts).unwrap();
        let dp = p.partition_stats();
        let en = exhaustive(p.probs());
        assert!(dp.exact);
        assert!((dp.pi - en.pi).abs() < 1e-12);
        assert!((dp.lambda_max - en.lambda_max).abs() < 1e-12);
    }

    #[test]
    fn counts_dp_spans_words() {
        // 100 + 60 + 50 + 1 = 211 ; best <= 105 is 101 (100 + 1)
        let st = from_counts(&[100, 60, 50, 1]);
        assert!((st.pi - 101.0 / 211.0).abs() < 1e-15);
        // 64-bit boundary shifts
        let st = from_counts(&[64, 64, 129]);
        assert!((st.pi - 128.0 / 257.0).abs() < 1e-15);
    }

    #[test]
    fn large_support_uses_differencing() {
        let s = 40;
        let probs: Vec<f64> = (1..=s).map(|i| i as f64).collect();
        let total: f64 = probs.iter().sum();
        let p = pv(&probs.iter().map(|x| x / total).collect::<Vec<_>>());
        let st = p.partition_stats();
        assert!(!st.exact);
        // 1..=40 sums to 820, an even number splittable in half.
        assert!(st.pi <= 0.5 && st.pi > 0.49);
    }

    #[test]
    fn differencing_example() {
        // KK on (8,7,6,5,4): 8-7=1, 6-5=1, 4-1=3, 3-1=2 → diff 2 of 30.
        let w = [8.0, 7.0, 6.0, 5.0, 4.0];
        let st = differencing(&w);
        assert!((st.pi - 14.0).abs() < 1e-12);
        let ex = exhaustive(&w);
        assert!((ex.pi - 15.0).abs() < 1e-12);
    }
}
