//! Seeded ensembles of independent chains and their per-generation summary.
//!
//! Replicates run in fixed-size chunks (in parallel with the `parallel`
//! feature) and are folded into the summary in replicate order, so the
//! floating-point reduction is identical for any worker count.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::schedule::Schedule;
use crate::simulate::{run_chain, ChainConfig, SimError, Trajectory};

const CHUNK: u64 = 64;

/// Running mean and variance (Welford), folded in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn summary(&self) -> MeanSe {
        let se = (self.n > 1).then(|| (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt());
        MeanSe {
            mean: self.mean,
            se,
        }
    }
}

/// Sample mean with its standard error (`None` for a single replicate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub generation: u64,
    pub sigma: MeanSe,
    pub sup: MeanSe,
    pub l1_to_gen0: MeanSe,
    pub l1_to_gen1: MeanSe,
    /// Fraction of replicates whose model is a Dirac by this generation.
    pub rho: f64,
    /// Entrywise mean of the model, when tracked.
    pub mean_probs: Option<Vec<MeanSe>>,
}

/// Per-replicate series kept for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateTrace {
    pub replicate_id: u64,
    pub sigma: Vec<f64>,
    pub l1_to_gen0: Vec<f64>,
    pub l1_to_gen1: Vec<f64>,
    pub collapse_time: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnsembleOptions {
    /// Keep per-generation series for the first this many replicates.
    pub max_traces: u64,
    pub track_mean_probs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub replicates: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub max_generations: u64,
    pub alphabet_size: usize,
    /// Index `m - 1` holds generation `m`.
    pub generations: Vec<GenerationSummary>,
    /// Collapse time histogram over collapsed replicates.
    pub collapse_histogram: BTreeMap<u64, u64>,
    pub collapsed: u64,
    pub uncollapsed: u64,
    /// How many replicates collapsed onto each token.
    pub absorbed_counts: Vec<u64>,
    /// `max_A p1(A) p1(A^c)` averaged over the realised first generations.
    pub gen1_lambda: MeanSe,
    pub gen1_partition_exact: bool,
    pub traces: Vec<ReplicateTrace>,
}

impl EnsembleSummary {
    pub fn generation(&self, m: u64) -> &GenerationSummary {
        &self.generations[m as usize - 1]
    }

    /// Fraction of all replicates absorbed on each token; sums to the
    /// collapsed fraction.
    pub fn absorbed_frequencies(&self) -> Vec<f64> {
        let r = self.replicates as f64;
        self.absorbed_counts.iter().map(|&c| c as f64 / r).collect()
    }

    pub fn mean_collapse_time(&self) -> Option<f64> {
        if self.collapsed == 0 {
            return None;
        }
        let sum: u64 = self.collapse_histogram.iter().map(|(t, c)| t * c).sum();
        Some(sum as f64 / self.collapsed as f64)
    }
}

struct GenerationAcc {
    sigma: Moments,
    sup: Moments,
    l1_gen0: Moments,
    l1_gen1: Moments,
    collapsed: u64,
    probs: Option<Vec<Moments>>,
}

struct Accumulator {
    generations: Vec<GenerationAcc>,
    histogram: BTreeMap<u64, u64>,
    collapsed: u64,
    uncollapsed: u64,
    absorbed: Vec<u64>,
    lambda: Moments,
    lambda_exact: bool,
    traces: Option<Vec<ReplicateTrace>>,
    max_traces: u64,
    size: usize,
}

impl Accumulator {
    fn new(cfg: &ChainConfig, opts: EnsembleOptions) -> Self {
        let size = cfg.initial.len();
        let generations = (0..cfg.max_generations)
            .map(|_| GenerationAcc {
                sigma: Moments::default(),
                sup: Moments::default(),
                l1_gen0: Moments::default(),
                l1_gen1: Moments::default(),
                collapsed: 0,
                probs: opts
                    .track_mean_probs
                    .then(|| vec![Moments::default(); size]),
            })
            .collect();
        Self {
            generations,
            histogram: BTreeMap::new(),
            collapsed: 0,
            uncollapsed: 0,
            absorbed: vec![0; size],
            lambda: Moments::default(),
            lambda_exact: true,
            traces: (opts.max_traces > 0).then(Vec::new),
            max_traces: opts.max_traces,
            size,
        }
    }

    fn push(&mut self, tr: &Trajectory) {
        let max = self.generations.len() as u64;
        for (idx, acc) in self.generations.iter_mut().enumerate() {
            let m = idx as u64 + 1;
            let rec = tr.record(m);
            acc.sigma.push(rec.sigma);
            acc.sup.push(rec.sup);
            acc.l1_gen0.push(rec.l1_to_gen0);
            acc.l1_gen1.push(rec.l1_to_gen1);
            if tr.collapse_time.is_some_and(|t| t <= m) {
                acc.collapsed += 1;
            }
            if let Some(probs) = acc.probs.as_mut() {
                for (mom, q) in probs.iter_mut().zip(rec.probs(self.size)) {
                    mom.push(q);
                }
            }
        }
        match (tr.collapse_time, tr.absorbed_token) {
            (Some(t), Some(token)) => {
                *self.histogram.entry(t).or_default() += 1;
                self.collapsed += 1;
                self.absorbed[token] += 1;
            }
            _ => self.uncollapsed += 1,
        }
        self.lambda.push(tr.gen1_partition.lambda_max);
        self.lambda_exact &= tr.gen1_partition.exact;
        if let Some(traces) = self.traces.as_mut().filter(|_| tr.replicate_id < self.max_traces) {
            let series = |f: fn(&crate::simulate::GenerationRecord) -> f64| {
                (1..=max).map(|m| f(tr.record(m))).collect::<Vec<_>>()
            };
            traces.push(ReplicateTrace {
                replicate_id: tr.replicate_id,
                sigma: series(|r| r.sigma),
                l1_to_gen0: series(|r| r.l1_to_gen0),
                l1_to_gen1: series(|r| r.l1_to_gen1),
                collapse_time: tr.collapse_time,
            });
        }
    }

    fn finish(self, cfg: &ChainConfig, replicates: u64) -> EnsembleSummary {
        let r = replicates as f64;
        let generations = self
            .generations
            .into_iter()
            .enumerate()
            .map(|(idx, acc)| GenerationSummary {
                generation: idx as u64 + 1,
                sigma: acc.sigma.summary(),
                sup: acc.sup.summary(),
                l1_to_gen0: acc.l1_gen0.summary(),
                l1_to_gen1: acc.l1_gen1.summary(),
                rho: acc.collapsed as f64 / r,
                mean_probs: acc
                    .probs
                    .map(|p| p.iter().map(Moments::summary).collect()),
            })
            .collect();
        EnsembleSummary {
            replicates,
            seed: cfg.seed,
            schedule: cfg.schedule,
            max_generations: cfg.max_generations,
            alphabet_size: self.size,
            generations,
            collapse_histogram: self.histogram,
            collapsed: self.collapsed,
            uncollapsed: self.uncollapsed,
            absorbed_counts: self.absorbed,
            gen1_lambda: self.lambda.summary(),
            gen1_partition_exact: self.lambda_exact,
            traces: self.traces.unwrap_or_default(),
        }
    }
}

pub fn run_ensemble(cfg: &ChainConfig, replicates: u64) -> Result<EnsembleSummary, SimError> {
    run_ensemble_with(cfg, replicates, EnsembleOptions::default())
}

pub fn run_ensemble_with(
    cfg: &ChainConfig,
    replicates: u64,
    opts: EnsembleOptions,
) -> Result<EnsembleSummary, SimError> {
    if replicates == 0 {
        return Err(SimError::InvalidConfig(
            "an ensemble needs at least one replicate".into(),
        ));
    }
    let mut acc = Accumulator::new(cfg, opts);
    let mut start = 0;
    while start < replicates {
        let end = (start + CHUNK).min(replicates);
        #[cfg(feature = "parallel")]
        let batch: Vec<_> = (start..end)
            .into_par_iter()
            .map(|r| run_chain(cfg, r))
            .collect();
        #[cfg(not(feature = "parallel"))]
        let batch: Vec<_> = (start..end).map(|r| run_chain(cfg, r)).collect();
        for tr in batch {
            acc.push(&tr?);
        }
        start = end;
    }
    Ok(acc.finish(cfg, replicates))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseStats {
    /// Mean over collapsed replicates only.
    pub mean_time: f64,
    pub se_time: Option<f64>,
    pub histogram: BTreeMap<u64, u64>,
    pub absorbed_frequencies: Vec<f64>,
    pub collapsed: u64,
    pub uncollapsed: u64,
}

/// Collapse-time statistics; uncollapsed replicates are counted, not imputed.
pub fn collapse_statistics(summary: &EnsembleSummary) -> Result<CollapseStats, SimError> {
    if summary.collapsed == 0 {
        return Err(SimError::NoCollapsedReplicates {
            max_generations: summary.max_generations,
        });
    }
    let mut times = Moments::default();
    for (&t, &c) in &summary.collapse_histogram {
        for _ in 0..c {
            times.push(t as f64);
        }
    }
    let ms = times.summary();
    Ok(CollapseStats {
        mean_time: ms.mean,
        se_time: ms.se,
        histogram: summary.collapse_histogram.clone(),
        absorbed_frequencies: summary.absorbed_frequencies(),
        collapsed: summary.collapsed,
        uncollapsed: summary.uncollapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ProbVec;

    fn cfg(schedule: Schedule, gens: u64) -> ChainConfig {
        ChainConfig::new(
            ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap(),
            schedule,
            gens,
            99,
        )
        .unwrap()
    }

    #[test]
    fn single_replicate_matches_its_trajectory() {
        let c = cfg(Schedule::partially_synthetic(20, 5).unwrap(), 12);
        let s = run_ensemble(&c, 1).unwrap();
        let tr = run_chain(&c, 0).unwrap();
        for m in 1..=12 {
            let g = s.generation(m);
            assert_eq!(g.sigma.mean, tr.record(m).sigma);
            assert_eq!(g.l1_to_gen1.mean, tr.record(m).l1_to_gen1);
            assert_eq!(g.sigma.se, None);
        }
    }

    #[test]
    fn same_seed_same_summary() {
        let c = cfg(Schedule::fully_synthetic(6).unwrap(), 40);
        let opts = EnsembleOptions {
            max_traces: u64::MAX,
            track_mean_probs: true,
        };
        let a = run_ensemble_with(&c, 150, opts).unwrap();
        let b = run_ensemble_with(&c, 150, opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rho_is_monotone_and_absorbed_sum_matches() {
        let c = cfg(Schedule::fully_synthetic(4).unwrap(), 60);
        let s = run_ensemble(&c, 300).unwrap();
        for w in s.generations.windows(2) {
            assert!(w[0].rho <= w[1].rho);
        }
        let total: f64 = s.absorbed_frequencies().iter().sum();
        assert!((total - s.collapsed as f64 / 300.0).abs() < 1e-12);
        assert_eq!(s.collapsed + s.uncollapsed, 300);
    }

    #[test]
    fn single_draw_collapses_immediately() {
        let c = cfg(Schedule::fully_synthetic(1).unwrap(), 5);
        let s = run_ensemble(&c, 50).unwrap();
        let st = collapse_statistics(&s).unwrap();
        assert_eq!(st.mean_time, 1.0);
        assert_eq!(st.histogram.get(&1), Some(&50));
    }

    #[test]
    fn no_collapse_is_an_error() {
        let c = ChainConfig::new(
            ProbVec::uniform(50).unwrap(),
            Schedule::partially_synthetic(500, 5).unwrap(),
            5,
            1,
        )
        .unwrap();
        let s = run_ensemble(&c, 10).unwrap();
        assert!(matches!(
            collapse_statistics(&s),
            Err(SimError::NoCollapsedReplicates { .. })
        ));
    }

    #[test]
    fn zero_replicates_rejected() {
        let c = cfg(Schedule::fully_synthetic(3).unwrap(), 5);
        assert!(run_ensemble(&c, 0).is_err());
    }
}
