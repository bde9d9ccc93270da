//! The recursive-training chain.
//!
//! Generation `m` pools `n_t` samples from each earlier model `t` (as
//! planned by a [`Schedule`]) and its model is the empirical frequency of
//! the pooled counts. Collapse is detected on the integer counts.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistError, ProbVec};
use crate::partition::PartitionStats;
use crate::rng::replicate_rng;
use crate::schedule::{RealDataMode, Schedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("generation {generation} has an empty training set")]
    EmptyTrainingSet { generation: u64 },
    #[error("history holds {got} models, generation {generation} needs {generation}")]
    HistoryLength { generation: u64, got: usize },
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("no replicate collapsed within {max_generations} generations")]
    NoCollapsedReplicates { max_generations: u64 },
}

/// Draws tokens from a fixed distribution by inverse CDF.
///
/// Counts-backed distributions are sampled on integers, so tokens with a
/// zero count can never be drawn.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Dirac(usize),
    Counts { cumulative: Vec<u64> },
    Real { cumulative: Vec<f64>, last: usize },
}

impl CategoricalSampler {
    pub fn new(p: &ProbVec) -> Self {
        if let Some(token) = p.dirac_token() {
            return Self {
                kind: SamplerKind::Dirac(token),
            };
        }
        let kind = match p.counts() {
            Some(counts) => SamplerKind::Counts {
                cumulative: counts
                    .iter()
                    .scan(0u64, |acc, &c| {
                        *acc += c;
                        Some(*acc)
                    })
                    .collect(),
            },
            None => {
                let cumulative: Vec<f64> = p
                    .probs()
                    .iter()
                    .scan(0.0, |acc, &q| {
                        *acc += q;
                        Some(*acc)
                    })
                    .collect();
                let last = p.probs().iter().rposition(|&q| q > 0.0).unwrap_or(0);
                SamplerKind::Real { cumulative, last }
            }
        };
        Self { kind }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.kind {
            SamplerKind::Dirac(token) => *token,
            SamplerKind::Counts { cumulative } => {
                let total = *cumulative.last().unwrap();
                let u = rng.random_range(0..total);
                cumulative.partition_point(|&c| c <= u)
            }
            SamplerKind::Real { cumulative, last } => {
                let u = rng.random::<f64>() * cumulative[*last];
                cumulative.partition_point(|&c| c <= u).min(*last)
            }
        }
    }

    /// Adds a multinomial(`n`, p) draw into `counts`.
    pub fn add_counts<R: Rng + ?Sized>(&self, n: u64, counts: &mut [u64], rng: &mut R) {
        if let SamplerKind::Dirac(token) = self.kind {
            counts[token] += n;
            return;
        }
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
    }
}

/// Multinomial(`n`, `p`) counts as `n` independent categorical draws.
pub fn sample_counts<R: Rng + ?Sized>(p: &ProbVec, n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    if n > 0 {
        CategoricalSampler::new(p).add_counts(n, &mut counts, rng);
    }
    counts
}

/// Pools the planned samples from each source into the next model.
fn pool<'a, R, F>(
    plan: &[u64],
    source: F,
    corpus: Option<&ProbVec>,
    schedule: &Schedule,
    generation: u64,
    rng: &mut R,
) -> Result<ProbVec, SimError>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> &'a ProbVec,
{
    let size = source(0).len();
    let mut counts = vec![0u64; size];
    for (t, &n) in plan.iter().enumerate() {
        if n == 0 {
            continue;
        }
        match (t, corpus, schedule) {
            (0, Some(corpus), Schedule::PartiallySynthetic { .. }) => {
                let fixed = corpus.counts().expect("corpus is counts-backed");
                for (c, f) in counts.iter_mut().zip(fixed) {
                    *c += f;
                }
            }
            (
                0,
                Some(corpus),
                Schedule::RandomlySampled {
                    real_data: RealDataMode::FixedCorpus,
                    ..
                },
            ) => CategoricalSampler::new(corpus).add_counts(n, &mut counts, rng),
            _ => CategoricalSampler::new(source(t)).add_counts(n, &mut counts, rng),
        }
    }
    match ProbVec::from_counts(counts) {
        Ok(p) => Ok(p),
        Err(DistError::EmptyCounts) => Err(SimError::EmptyTrainingSet { generation }),
        Err(e) => Err(e.into()),
    }
}

/// Trains generation `m = history.len()` from `history = [p^(0), ..., p^(m-1)]`.
///
/// `corpus` is the realised generation-1 training data; schedules that
/// reuse it take their `t = 0` contribution from it instead of `p^(0)`.
pub fn next_generation<R: Rng + ?Sized>(
    history: &[ProbVec],
    corpus: Option<&ProbVec>,
    schedule: &Schedule,
    m: u64,
    rng: &mut R,
) -> Result<ProbVec, SimError> {
    if m == 0 || history.len() as u64 != m {
        return Err(SimError::HistoryLength {
            generation: m,
            got: history.len(),
        });
    }
    let plan = schedule.counts_for(m, rng)?;
    pool(&plan, |t| &history[t], corpus, schedule, m, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub initial: ProbVec,
    pub schedule: Schedule,
    pub max_generations: u64,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(
        initial: ProbVec,
        schedule: Schedule,
        max_generations: u64,
        seed: u64,
    ) -> Result<Self, SimError> {
        if max_generations == 0 {
            return Err(SimError::InvalidConfig(
                "max_generations must be at least 1".into(),
            ));
        }
        let schedule = schedule.validated()?;
        Ok(Self {
            initial,
            schedule,
            max_generations,
            seed,
        })
    }
}

/// Per-generation statistics of one chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub total: u64,
    /// Nonzero `(token, count)` pairs, ascending by token.
    pub counts: Vec<(u32, u64)>,
    pub sigma: f64,
    pub sup: f64,
    pub argmax: usize,
    pub l1_to_gen0: f64,
    pub l1_to_gen1: f64,
}

impl GenerationRecord {
    fn new(p: &ProbVec, gen0: &ProbVec, gen1: &ProbVec) -> Result<Self, SimError> {
        let counts = p
            .counts()
            .expect("trained models are counts-backed")
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c))
            .collect();
        let sup = p.sup_norm();
        Ok(Self {
            total: p.total(),
            counts,
            sigma: p.sigma(),
            sup: sup.value,
            argmax: sup.argmax,
            l1_to_gen0: p.l1_dist(gen0)?,
            l1_to_gen1: p.l1_dist(gen1)?,
        })
    }

    pub fn is_dirac(&self) -> bool {
        self.counts.len() == 1
    }

    pub fn dense_counts(&self, size: usize) -> Vec<u64> {
        let mut dense = vec![0; size];
        for &(i, c) in &self.counts {
            dense[i as usize] = c;
        }
        dense
    }

    pub fn probs(&self, size: usize) -> Vec<f64> {
        let t = self.total as f64;
        self.dense_counts(size)
            .into_iter()
            .map(|c| c as f64 / t)
            .collect()
    }
}

/// One realised chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub replicate_id: u64,
    pub max_generations: u64,
    /// Records for generations `1..=simulated`; index `m - 1`.
    pub generations: Vec<GenerationRecord>,
    /// Set when the chain reached a state it can never leave; later
    /// generations repeat the last record.
    pub absorbed_at: Option<u64>,
    /// First generation whose model is a Dirac.
    pub collapse_time: Option<u64>,
    /// Token of that Dirac.
    pub absorbed_token: Option<usize>,
    pub gen1_partition: PartitionStats,
}

impl Trajectory {
    /// Record for generation `m` in `1..=max_generations`.
    pub fn record(&self, m: u64) -> &GenerationRecord {
        assert!(
            m >= 1 && m <= self.max_generations,
            "generation {m} outside 1..={}",
            self.max_generations
        );
        let idx = (m as usize - 1).min(self.generations.len() - 1);
        &self.generations[idx]
    }

    pub fn simulated_generations(&self) -> u64 {
        self.generations.len() as u64
    }
}

/// Recent models kept addressable by generation index.
struct History {
    offset: u64,
    models: VecDeque<ProbVec>,
    keep: usize,
}

impl History {
    fn get<'a>(&'a self, t: usize, gen0: &'a ProbVec) -> &'a ProbVec {
        if t == 0 {
            return gen0;
        }
        let idx = t as u64 - self.offset;
        &self.models[idx as usize]
    }

    fn push(&mut self, p: ProbVec) {
        self.models.push_back(p);
        while self.models.len() > self.keep {
            self.models.pop_front();
            self.offset += 1;
        }
    }
}

/// True if every source feeding generation `m + 1` is the Dirac on `token`.
fn feeds_only_dirac(
    plan: &[u64],
    token: usize,
    history: &History,
    gen0: &ProbVec,
    corpus: Option<&ProbVec>,
    schedule: &Schedule,
) -> bool {
    plan.iter().enumerate().filter(|(_, &n)| n > 0).all(|(t, _)| {
        let src = match (t, corpus) {
            (0, Some(c)) if schedule.reuses_corpus() => c,
            _ => history.get(t, gen0),
        };
        src.dirac_token() == Some(token)
    })
}

/// Simulates replicate `replicate_id` of `cfg` for up to `max_generations`.
pub fn run_chain(cfg: &ChainConfig, replicate_id: u64) -> Result<Trajectory, SimError> {
    let mut rng = replicate_rng(cfg.seed, replicate_id);
    let schedule = &cfg.schedule;
    let gen0 = &cfg.initial;
    let keep = match *schedule {
        Schedule::RandomlySampled { .. } => usize::MAX,
        Schedule::MostRecent { window, .. } => window as usize,
        _ => 1,
    };
    let mut history = History {
        offset: 1,
        models: VecDeque::new(),
        keep,
    };
    let mut corpus: Option<ProbVec> = None;
    let mut gen1: Option<ProbVec> = None;
    let mut generations = Vec::new();
    let mut collapse_time = None;
    let mut absorbed_token = None;
    let mut absorbed_at = None;

    for m in 1..=cfg.max_generations {
        let plan = schedule.counts_for(m, &mut rng)?;
        let p = pool(
            &plan,
            |t| history.get(t, gen0),
            corpus.as_ref(),
            schedule,
            m,
            &mut rng,
        )?;
        if m == 1 {
            if schedule.reuses_corpus() {
                corpus = Some(p.clone());
            }
            gen1 = Some(p.clone());
        }
        let record = GenerationRecord::new(&p, gen0, gen1.as_ref().unwrap())?;
        let dirac = p.dirac_token();
        if collapse_time.is_none() {
            if let Some(token) = dirac {
                collapse_time = Some(m);
                absorbed_token = Some(token);
            }
        }
        generations.push(record);
        history.push(p);

        if let (Some(token), true) = (dirac, schedule.is_deterministic()) {
            if m < cfg.max_generations {
                let next = schedule.counts_for(m + 1, &mut rng)?;
                if feeds_only_dirac(&next, token, &history, gen0, corpus.as_ref(), schedule) {
                    absorbed_at = Some(m);
                    break;
                }
            }
        }
    }

    let gen1_partition = gen1
        .as_ref()
        .expect("at least one generation simulated")
        .partition_stats();
    Ok(Trajectory {
        replicate_id,
        max_generations: cfg.max_generations,
        generations,
        absorbed_at,
        collapse_time,
        absorbed_token,
        gen1_partition,
    })
}
