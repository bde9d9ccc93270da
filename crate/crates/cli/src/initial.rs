//! Initial distributions for experiments.

use collapse_core::ProbVec;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitialError {
    #[error("S0 = {s0} is not reachable with support {support} (need 1/{support} <= S0 < 1)")]
    InfeasibleTarget { s0: f64, support: usize },
    #[error("support {support} exceeds vocabulary size {size}")]
    SupportTooLarge { support: usize, size: usize },
    #[error("invalid explicit distribution: {0}")]
    Explicit(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Explicit { probs: Vec<f64> },
    /// One heavy atom plus a uniform remainder over `support - 1` tokens.
    TwoLevel { size: usize, support: usize, s0: f64 },
}

impl InitialSpec {
    pub(crate) fn resolve(
        probs: Option<Vec<f64>>,
        size: Option<usize>,
        support: Option<usize>,
        s0: Option<f64>,
    ) -> Result<Self, ConfigError> {
        let spec = match (probs, size, support, s0) {
            (Some(probs), None, None, None) => InitialSpec::Explicit { probs },
            (None, Some(size), support, Some(s0)) => InitialSpec::TwoLevel {
                size,
                support: support.unwrap_or(size),
                s0,
            },
            (Some(_), ..) => {
                return Err(ConfigError::validation(
                    "initial",
                    "give either `probs` or `size`/`support`/`s0`, not both",
                ))
            }
            (None, None, ..) => {
                return Err(ConfigError::validation("initial.size", "required without `probs`"))
            }
            (None, Some(_), _, None) => {
                return Err(ConfigError::validation("initial.s0", "required without `probs`"))
            }
        };
        make_initial_distribution(&spec).map_err(|e| ConfigError::validation("initial", e.to_string()))?;
        Ok(spec)
    }
}

/// Builds the distribution a spec describes.
///
/// The two-level profile puts mass `a` on token 0 and `(1-a)/(k-1)` on
/// tokens `1..k`, with `a` the larger root of
/// `a^2 + (1-a)^2/(k-1) = S0`, i.e. `a = (1 + sqrt((k-1)(k S0 - 1))) / k`.
pub fn make_initial_distribution(spec: &InitialSpec) -> Result<ProbVec, InitialError> {
    match spec {
        InitialSpec::Explicit { probs } => {
            ProbVec::new(probs.clone()).map_err(|e| InitialError::Explicit(e.to_string()))
        }
        &InitialSpec::TwoLevel { size, support, s0 } => two_level(size, support, s0),
    }
}

fn two_level(size: usize, support: usize, s0: f64) -> Result<ProbVec, InitialError> {
    if support > size {
        return Err(InitialError::SupportTooLarge { support, size });
    }
    let k = support as f64;
    // S0 == 1/k is allowed up to rounding of the caller's decimal.
    let floor = 1.0 / k;
    if support == 0 || !(s0 >= floor - 1e-12) || !(s0 < 1.0) {
        return Err(InitialError::InfeasibleTarget { s0, support });
    }
    let mut probs = vec![0.0; size];
    let disc = ((k - 1.0) * (k * s0 - 1.0)).max(0.0);
    let heavy = (1.0 + disc.sqrt()) / k;
    let light = (1.0 - heavy) / (k - 1.0);
    probs[0] = heavy;
    for p in &mut probs[1..support] {
        *p = light;
    }
    ProbVec::new(probs).map_err(|e| InitialError::Explicit(e.to_string()))
}

/// A random point of the simplex, uniform (Dirichlet(1, ..., 1)).
pub fn flat_dirichlet<R: Rng + ?Sized>(size: usize, rng: &mut R) -> ProbVec {
    loop {
        let draws: Vec<f64> = (0..size)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = draws.iter().sum();
        let mut probs: Vec<f64> = draws.iter().map(|d| d / total).collect();
        // push the rounding residue onto the largest entry
        let residue = 1.0 - probs.iter().sum::<f64>();
        let top = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        probs[top] += residue;
        if let Ok(p) = ProbVec::new(probs) {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(size: usize, support: usize, s0: f64) -> Result<ProbVec, InitialError> {
        make_initial_distribution(&InitialSpec::TwoLevel { size, support, s0 })
    }

    #[test]
    fn figure_profile_hits_target() {
        let p = profile(600, 52, 0.1).unwrap();
        assert_eq!(p.len(), 600);
        assert_eq!(p.support_size(), 52);
        assert!((p.sigma() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn minimum_energy_is_uniform() {
        let p = profile(10, 4, 0.25).unwrap();
        for &q in &p.probs()[..4] {
            assert!((q - 0.25).abs() < 1e-15);
        }
        assert!(p.probs()[4..].iter().all(|&q| q == 0.0));
    }

    #[test]
    fn near_dirac_two_atoms() {
        let p = profile(2, 2, 0.9999).unwrap();
        let a = p.probs()[0];
        let recomputed = a * a + (1.0 - a) * (1.0 - a);
        assert!((recomputed - 0.9999).abs() < 1e-12);
        assert!((p.sigma() - 0.9999).abs() < 1e-12);
        assert!(a > 0.9999);
    }

    #[test]
    fn infeasible_targets() {
        assert!(matches!(profile(10, 4, 0.2), Err(InitialError::InfeasibleTarget { .. })));
        assert!(matches!(profile(10, 4, 1.0), Err(InitialError::InfeasibleTarget { .. })));
        assert!(matches!(profile(3, 4, 0.5), Err(InitialError::SupportTooLarge { .. })));
    }

    #[test]
    fn many_targets_recompute() {
        for support in [2usize, 3, 10, 52, 300] {
            for i in 0..20 {
                let lo = 1.0 / support as f64;
                let s0 = lo + (1.0 - lo) * i as f64 / 20.5;
                let p = profile(600, support, s0).unwrap();
                assert!((p.sigma() - s0).abs() < 1e-6, "{support} {s0}");
                assert_eq!(p.support_size(), support);
            }
        }
    }

    #[test]
    fn dirichlet_is_a_distribution() {
        let mut rng = collapse_core::replicate_rng(3, 0);
        for _ in 0..100 {
            let p = flat_dirichlet(3, &mut rng);
            assert_eq!(p.len(), 3);
        }
    }
}
