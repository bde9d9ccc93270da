//! Throughput of the sampler and of whole ensembles.

use std::time::Instant;

use collapse_core::simulate::sample_counts;
use collapse_core::{replicate_rng, run_ensemble, ChainConfig, Schedule};
use serde::Serialize;

use crate::figures::figure_profile;
use crate::initial::make_initial_distribution;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub name: String,
    pub work: u64,
    pub unit: &'static str,
    pub seconds: f64,
    pub per_second: f64,
}

fn row(name: &str, work: u64, unit: &'static str, start: Instant) -> BenchRow {
    let seconds = start.elapsed().as_secs_f64();
    BenchRow {
        name: name.to_owned(),
        work,
        unit,
        seconds,
        per_second: work as f64 / seconds.max(1e-9),
    }
}

pub fn run_bench(seed: u64, replicates: u64) -> anyhow::Result<Vec<BenchRow>> {
    let p0 = make_initial_distribution(&figure_profile())?;
    let mut out = Vec::new();

    let mut rng = replicate_rng(seed, 0);
    let draws = 2_000_000u64;
    let start = Instant::now();
    let counts = sample_counts(&p0, draws, &mut rng);
    std::hint::black_box(counts);
    out.push(row("categorical draws (s = 600)", draws, "draws", start));

    let cases = [
        ("fully synthetic n = 100", Schedule::fully_synthetic(100)?, 2000),
        ("partially synthetic N = 100, n = 100", Schedule::partially_synthetic(100, 100)?, 50),
        ("most recent n = 10, K = 4", Schedule::most_recent(10, 4)?, 500),
    ];
    for (name, schedule, gens) in cases {
        let cfg = ChainConfig::new(p0.clone(), schedule, gens, seed)?;
        let start = Instant::now();
        let s = run_ensemble(&cfg, replicates)?;
        std::hint::black_box(&s);
        out.push(row(name, replicates, "replicates", start));
    }
    Ok(out)
}

pub fn format_rows(rows: &[BenchRow]) -> String {
    let mut s = format!("{:<40} {:>12} {:>10} {:>14}\n", "case", "work", "seconds", "per second");
    for r in rows {
        s.push_str(&format!(
            "{:<40} {:>12} {:>10.3} {:>14.1}\n",
            r.name,
            format!("{} {}", r.work, r.unit),
            r.seconds,
            r.per_second
        ));
    }
    s
}
