//! Probability vectors over a finite token alphabet and the scalar
//! statistics used to track collapse: `sigma` (sum of squares), the sup
//! norm, L1 distance and support size.

use serde::Serialize;
use thiserror::Error;

use crate::partition::{self, PartitionStats};

/// Absolute tolerance on `|sum - 1|` accepted by [`ProbVec::new`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Entries of a real-valued vector at or below this are outside the support.
pub const SUPPORT_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("probability vector is empty")]
    EmptyVector,
    #[error("entry {index} is negative or not finite: {value}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, expected 1 within {SUM_TOLERANCE:e}")]
    SumNotOne { sum: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("count vector has zero total")]
    EmptyCounts,
    #[error("token {token} out of range for alphabet of size {size}")]
    TokenOutOfRange { token: usize, size: usize },
}

/// Largest entry of a distribution together with the lowest index attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNorm {
    pub value: f64,
    pub argmax: usize,
}

/// A distribution over `len()` tokens.
///
/// Either built from real entries (validated, never renormalised) or from
/// integer counts, in which case `probs[i] == counts[i] / total` and the
/// counts are kept so collapse can be detected exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
    total: u64,
}

impl ProbVec {
    pub fn new(raw: Vec<f64>) -> Result<Self, DistError> {
        if raw.is_empty() {
            return Err(DistError::EmptyVector);
        }
        if let Some((index, &value)) = raw
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(DistError::NegativeEntry { index, value });
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DistError::SumNotOne { sum });
        }
        Ok(Self {
            probs: raw,
            counts: None,
            total: 0,
        })
    }

    /// Empirical frequency vector of `counts`.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self, DistError> {
        if counts.is_empty() {
            return Err(DistError::EmptyVector);
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(DistError::EmptyCounts);
        }
        let denom = total as f64;
        let probs = counts.iter().map(|&c| c as f64 / denom).collect();
        Ok(Self {
            probs,
            counts: Some(counts),
            total,
        })
    }

    pub fn dirac(size: usize, token: usize) -> Result<Self, DistError> {
        if size == 0 {
            return Err(DistError::EmptyVector);
        }
        if token >= size {
            return Err(DistError::TokenOutOfRange { token, size });
        }
        let mut probs = vec![0.0; size];
        probs[token] = 1.0;
        Ok(Self {
            probs,
            counts: None,
            total: 0,
        })
    }

    pub fn uniform(size: usize) -> Result<Self, DistError> {
        if size == 0 {
            return Err(DistError::EmptyVector);
        }
        // Exact for every size: k * (1/k) rounds to 1 within a few ulps.
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Backing counts, when this vector is an empirical frequency.
    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    /// Sample total behind the counts (0 for real-valued vectors).
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sum of squared probabilities, in `[1/s, 1]`.
    pub fn sigma(&self) -> f64 {
        match &self.counts {
            Some(counts) => {
                let sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
                let t = self.total as u128;
                if sq == t * t {
                    1.0
                } else {
                    sq as f64 / (t * t) as f64
                }
            }
            None => self.probs.iter().map(|p| p * p).sum(),
        }
    }

    /// Largest entry; ties go to the lowest token index.
    pub fn sup_norm(&self) -> SupNorm {
        let mut argmax = 0;
        match &self.counts {
            Some(counts) => {
                for (i, &c) in counts.iter().enumerate() {
                    if c > counts[argmax] {
                        argmax = i;
                    }
                }
                let value = if counts[argmax] == self.total {
                    1.0
                } else {
                    self.probs[argmax]
                };
                SupNorm { value, argmax }
            }
            None => {
                for (i, &p) in self.probs.iter().enumerate() {
                    if p > self.probs[argmax] {
                        argmax = i;
                    }
                }
                SupNorm {
                    value: self.probs[argmax],
                    argmax,
                }
            }
        }
    }

    pub fn l1_dist(&self, other: &ProbVec) -> Result<f64, DistError> {
        if self.len() != other.len() {
            return Err(DistError::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    pub fn support_size(&self) -> usize {
        match &self.counts {
            Some(counts) => counts.iter().filter(|&&c| c > 0).count(),
            None => self.probs.iter().filter(|&&p| p > SUPPORT_EPS).count(),
        }
    }

    /// Token carrying all the mass, if this is a Dirac.
    ///
    /// Counts-backed vectors are checked on integers (max count equals total).
    pub fn dirac_token(&self) -> Option<usize> {
        match &self.counts {
            Some(counts) => counts.iter().position(|&c| c == self.total),
            None => {
                let sup = self.sup_norm();
                (sup.value == 1.0).then_some(sup.argmax)
            }
        }
    }

    pub fn is_dirac(&self) -> bool {
        self.dirac_token().is_some()
    }

    pub fn partition_stats(&self) -> PartitionStats {
        partition::partition_stats(self)
    }
}
