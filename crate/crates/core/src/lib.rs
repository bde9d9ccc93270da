//! Simulation and analysis of model collapse under recursive training on
//! categorical distributions.
//!
//! A "model" is a probability vector; training on `n` samples means taking
//! the empirical distribution of those samples. [`Schedule`] decides which
//! earlier models (and real data) each generation is trained on.

pub mod analytics;
pub mod dist;
pub mod ensemble;
pub mod partition;
pub mod rng;
pub mod schedule;
pub mod simulate;
pub mod softmax;

pub use dist::{DistError, ProbVec, SupNorm};
pub use ensemble::{
    collapse_statistics, run_ensemble, run_ensemble_with, CollapseStats, EnsembleOptions,
    EnsembleSummary, GenerationSummary, MeanSe,
};
pub use partition::PartitionStats;
pub use rng::replicate_rng;
pub use schedule::{RealDataMode, Schedule, ScheduleError, ScheduleKind};
pub use simulate::{next_generation, run_chain, ChainConfig, SimError, Trajectory};
