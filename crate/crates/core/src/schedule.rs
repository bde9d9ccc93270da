//! Sample-count plans: how many training samples generation `m` draws from
//! each earlier model `t < m`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("generation index must be at least 1, got {0}")]
    InvalidGeneration(u64),
    #[error("invalid schedule: {0}")]
    Invalid(String),
}

/// Where generation-0 samples come from in [`Schedule::RandomlySampled`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealDataMode {
    /// Fresh i.i.d. draws from the ground truth every time.
    #[default]
    Fresh,
    /// Resampling with replacement from the realised generation-1 corpus.
    FixedCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    FullySynthetic,
    PartiallySynthetic,
    MostRecent,
    RandomlySampled,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::FullySynthetic => "fully_synthetic",
            ScheduleKind::PartiallySynthetic => "partially_synthetic",
            ScheduleKind::MostRecent => "most_recent",
            ScheduleKind::RandomlySampled => "randomly_sampled",
        }
    }
}

/// A recursive-training scenario.
///
/// `samples` is the per-generation synthetic budget; `real_samples` the size
/// of the real corpus mixed in by the partially synthetic scenario; `window`
/// the number of most recent models sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    FullySynthetic {
        samples: u64,
    },
    PartiallySynthetic {
        samples: u64,
        real_samples: u64,
    },
    MostRecent {
        samples: u64,
        window: u64,
    },
    RandomlySampled {
        samples: u64,
        #[serde(default)]
        real_data: RealDataMode,
    },
}

impl Schedule {
    pub fn fully_synthetic(samples: u64) -> Result<Self, ScheduleError> {
        Self::FullySynthetic { samples }.validated()
    }

    pub fn partially_synthetic(real_samples: u64, samples: u64) -> Result<Self, ScheduleError> {
        Self::PartiallySynthetic {
            samples,
            real_samples,
        }
        .validated()
    }

    pub fn most_recent(samples: u64, window: u64) -> Result<Self, ScheduleError> {
        Self::MostRecent { samples, window }.validated()
    }

    pub fn randomly_sampled(samples: u64, real_data: RealDataMode) -> Result<Self, ScheduleError> {
        Self::RandomlySampled { samples, real_data }.validated()
    }

    pub fn validated(self) -> Result<Self, ScheduleError> {
        if self.samples() == 0 {
            return Err(ScheduleError::Invalid(
                "synthetic sample budget must be at least 1".into(),
            ));
        }
        match self {
            Schedule::PartiallySynthetic { real_samples: 0, .. } => Err(ScheduleError::Invalid(
                "partially synthetic schedule needs a real corpus of at least 1 sample".into(),
            )),
            Schedule::MostRecent { window: 0, .. } => Err(ScheduleError::Invalid(
                "most recent schedule needs a window of at least 1".into(),
            )),
            _ => Ok(self),
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            Schedule::FullySynthetic { .. } => ScheduleKind::FullySynthetic,
            Schedule::PartiallySynthetic { .. } => ScheduleKind::PartiallySynthetic,
            Schedule::MostRecent { .. } => ScheduleKind::MostRecent,
            Schedule::RandomlySampled { .. } => ScheduleKind::RandomlySampled,
        }
    }

    pub fn samples(&self) -> u64 {
        match *self {
            Schedule::FullySynthetic { samples }
            | Schedule::PartiallySynthetic { samples, .. }
            | Schedule::MostRecent { samples, .. }
            | Schedule::RandomlySampled { samples, .. } => samples,
        }
    }

    /// Whether the `t = 0` source is the realised generation-1 corpus rather
    /// than fresh draws from the ground truth.
    pub fn reuses_corpus(&self) -> bool {
        matches!(
            self,
            Schedule::PartiallySynthetic { .. }
                | Schedule::RandomlySampled {
                    real_data: RealDataMode::FixedCorpus,
                    ..
                }
        )
    }

    /// True when `counts_for` never touches the random stream.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Schedule::RandomlySampled { .. })
    }

    /// Samples each model in a most-recent window contributes: `floor(n/K)`,
    /// but never fewer than one.
    fn per_window_model(samples: u64, window: u64) -> u64 {
        (samples / window).max(1)
    }

    /// Counts `(n_0, ..., n_{m-1})` for generation `m`.
    ///
    /// Generation 1 always trains on the full first budget of real data.
    /// Only the randomly sampled scenario consumes `rng`.
    pub fn counts_for<R: Rng + ?Sized>(
        &self,
        m: u64,
        rng: &mut R,
    ) -> Result<Vec<u64>, ScheduleError> {
        if m == 0 {
            return Err(ScheduleError::InvalidGeneration(m));
        }
        let len = m as usize;
        let mut counts = vec![0u64; len];
        if m == 1 {
            counts[0] = self.total_samples(1)?;
            return Ok(counts);
        }
        match *self {
            Schedule::FullySynthetic { samples } => counts[len - 1] = samples,
            Schedule::PartiallySynthetic {
                samples,
                real_samples,
            } => {
                counts[0] = real_samples;
                counts[len - 1] = samples;
            }
            Schedule::MostRecent { samples, window } => {
                let each = Self::per_window_model(samples, window);
                let first = m.saturating_sub(window) as usize;
                for c in &mut counts[first..] {
                    *c = each;
                }
            }
            Schedule::RandomlySampled { samples, .. } => {
                for _ in 0..samples {
                    counts[rng.random_range(0..len)] += 1;
                }
            }
        }
        Ok(counts)
    }

    /// Total training-set size at generation `m`; never consumes randomness.
    pub fn total_samples(&self, m: u64) -> Result<u64, ScheduleError> {
        if m == 0 {
            return Err(ScheduleError::InvalidGeneration(m));
        }
        Ok(match *self {
            Schedule::FullySynthetic { samples } | Schedule::RandomlySampled { samples, .. } => {
                samples
            }
            Schedule::PartiallySynthetic {
                samples,
                real_samples,
            } => {
                if m == 1 {
                    real_samples
                } else {
                    real_samples + samples
                }
            }
            Schedule::MostRecent { samples, window } => {
                if m == 1 {
                    samples
                } else {
                    window.min(m) * Self::per_window_model(samples, window)
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Panics if the rng is touched.
    struct NoRng;

    impl rand::RngCore for NoRng {
        fn next_u32(&mut self) -> u32 {
            panic!("deterministic schedule consumed randomness")
        }
        fn next_u64(&mut self) -> u64 {
            panic!("deterministic schedule consumed randomness")
        }
        fn fill_bytes(&mut self, _: &mut [u8]) {
            panic!("deterministic schedule consumed randomness")
        }
    }

    #[test]
    fn fully_synthetic_counts() {
        let s = Schedule::fully_synthetic(1000).unwrap();
        assert_eq!(s.counts_for(3, &mut NoRng).unwrap(), vec![0, 0, 1000]);
        assert_eq!(s.counts_for(1, &mut NoRng).unwrap(), vec![1000]);
        let s = Schedule::fully_synthetic(50).unwrap();
        for m in 1..20 {
            assert_eq!(s.total_samples(m).unwrap(), 50);
        }
    }

    #[test]
    fn partially_synthetic_counts() {
        let s = Schedule::partially_synthetic(100, 10).unwrap();
        assert_eq!(s.counts_for(5, &mut NoRng).unwrap(), vec![100, 0, 0, 0, 10]);
        assert_eq!(s.counts_for(1, &mut NoRng).unwrap(), vec![100]);
        assert_eq!(s.counts_for(2, &mut NoRng).unwrap(), vec![100, 10]);
        assert_eq!(s.total_samples(2).unwrap(), 110);
        assert_eq!(s.total_samples(1).unwrap(), 100);
    }

    #[test]
    fn most_recent_counts() {
        let s = Schedule::most_recent(10, 4).unwrap();
        assert_eq!(s.counts_for(2, &mut NoRng).unwrap(), vec![2, 2]);
        assert_eq!(s.total_samples(2).unwrap(), 4);
        assert_eq!(
            s.counts_for(6, &mut NoRng).unwrap(),
            vec![0, 0, 2, 2, 2, 2]
        );
        let s = Schedule::most_recent(10, 3).unwrap();
        for m in 3..10 {
            assert_eq!(s.total_samples(m).unwrap(), 9);
            let c = s.counts_for(m, &mut NoRng).unwrap();
            assert_eq!(c.iter().sum::<u64>(), 9);
        }
    }

    #[test]
    fn most_recent_window_wider_than_budget() {
        let s = Schedule::most_recent(10, 16).unwrap();
        let c = s.counts_for(20, &mut NoRng).unwrap();
        assert_eq!(&c[..4], &[0, 0, 0, 0]);
        assert!(c[4..].iter().all(|&x| x == 1));
        assert_eq!(s.total_samples(20).unwrap(), 16);
        assert_eq!(s.total_samples(3).unwrap(), 3);
    }

    #[test]
    fn window_one_is_fully_synthetic() {
        let a = Schedule::most_recent(37, 1).unwrap();
        let b = Schedule::fully_synthetic(37).unwrap();
        for m in 1..50 {
            assert_eq!(
                a.counts_for(m, &mut NoRng).unwrap(),
                b.counts_for(m, &mut NoRng).unwrap()
            );
        }
    }

    #[test]
    fn generation_zero_rejected() {
        let s = Schedule::fully_synthetic(3).unwrap();
        assert_eq!(
            s.counts_for(0, &mut NoRng),
            Err(ScheduleError::InvalidGeneration(0))
        );
        assert_eq!(s.total_samples(0), Err(ScheduleError::InvalidGeneration(0)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(Schedule::fully_synthetic(0).is_err());
        assert!(Schedule::partially_synthetic(0, 10).is_err());
        assert!(Schedule::most_recent(10, 0).is_err());
    }

    #[test]
    fn randomly_sampled_sums_to_budget() {
        let s = Schedule::randomly_sampled(25, RealDataMode::Fresh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..30 {
            let c = s.counts_for(m, &mut rng).unwrap();
            assert_eq!(c.len() as u64, m);
            assert_eq!(c.iter().sum::<u64>(), 25);
            assert_eq!(s.total_samples(m).unwrap(), 25);
        }
    }

    #[test]
    fn randomly_sampled_is_uniform_over_sources() {
        let n = 12u64;
        let m = 5u64;
        let draws = 100_000;
        let s = Schedule::randomly_sampled(n, RealDataMode::Fresh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum = vec![0.0f64; m as usize];
        let mut sum_sq = vec![0.0f64; m as usize];
        for _ in 0..draws {
            for (t, c) in s.counts_for(m, &mut rng).unwrap().into_iter().enumerate() {
                sum[t] += c as f64;
                sum_sq[t] += (c * c) as f64;
            }
        }
        let expected = n as f64 / m as f64;
        for t in 0..m as usize {
            let mean = sum[t] / draws as f64;
            let var = sum_sq[t] / draws as f64 - mean * mean;
            let se = (var / draws as f64).sqrt();
            assert!((mean - expected).abs() < 4.0 * se, "t={t} mean={mean}");
        }
    }
}
