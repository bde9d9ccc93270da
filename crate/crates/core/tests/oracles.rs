//! Independent reference computations checked against the library.

use collapse_core::analytics::{s_m_fully, s_m_partial_recursive};
use collapse_core::ensemble::run_ensemble_with;
use collapse_core::{run_ensemble, ChainConfig, EnsembleOptions, ProbVec, Schedule};

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    let mut coef = 1.0;
    for k in 0..=n {
        row[k] = coef * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        coef = coef * (n - k) as f64 / (k + 1) as f64;
    }
    row
}

/// Distribution of the count of token 0 after `m` fully synthetic steps.
fn two_token_law(n: usize, p0: f64, m: usize) -> Vec<f64> {
    let trans: Vec<Vec<f64>> = (0..=n).map(|i| binomial_pmf(n, i as f64 / n as f64)).collect();
    // generation 1 samples from p0 itself
    let mut law = binomial_pmf(n, p0);
    for _ in 1..m {
        let mut next = vec![0.0; n + 1];
        for (i, &w) in law.iter().enumerate() {
            for (j, &t) in trans[i].iter().enumerate() {
                next[j] += w * t;
            }
        }
        law = next;
    }
    law
}

#[test]
fn two_token_chain_matches_s_m() {
    for n in [2usize, 3, 4, 7] {
        let p0 = 0.3;
        let s0 = p0 * p0 + (1.0 - p0) * (1.0 - p0);
        for m in 1..=50 {
            let law = two_token_law(n, p0, m);
            let s: f64 = law
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let q = k as f64 / n as f64;
                    w * (q * q + (1.0 - q) * (1.0 - q))
                })
                .sum();
            let f = s_m_fully(s0, n as u64, m as u64).unwrap();
            assert!((s - f).abs() <= 1e-12 * f, "n={n} m={m}: {s} vs {f}");
        }
    }
}

#[test]
fn two_token_chain_matches_simulated_rho() {
    let n = 3;
    let p0 = ProbVec::new(vec![0.3, 0.7]).unwrap();
    let r = 20_000;
    let cfg = ChainConfig::new(p0, Schedule::fully_synthetic(n as u64).unwrap(), 20, 11).unwrap();
    let summary = run_ensemble(&cfg, r).unwrap();
    for m in 1..=20 {
        let law = two_token_law(n, 0.3, m);
        let rho = law[0] + law[n];
        let se = (rho * (1.0 - rho) / r as f64).sqrt().max(1.0 / r as f64);
        let got = summary.generation(m as u64).rho;
        assert!((got - rho).abs() <= 4.0 * se, "m={m}: {got} vs {rho}");
    }
}

#[test]
fn partial_recursion_matches_exact_enumeration() {
    // Two tokens, N = 2, n = 1: enumerate every path of the first 3 generations.
    let (p, real, n) = (0.3f64, 2usize, 1usize);
    let s0 = p * p + (1.0 - p) * (1.0 - p);
    let mut expect = [0.0; 4];
    let corpus = binomial_pmf(real, p);
    for (c, wc) in corpus.iter().enumerate() {
        let p1 = c as f64 / real as f64;
        expect[1] += wc * (p1 * p1 + (1.0 - p1) * (1.0 - p1));
        // state: probability of token 0 in the current model
        let mut states = vec![(p1, *wc)];
        for slot in expect.iter_mut().skip(2) {
            let mut next = Vec::new();
            for &(q, w) in &states {
                for (k, wk) in binomial_pmf(n, q).iter().enumerate() {
                    let mixed = (c + k) as f64 / (real + n) as f64;
                    next.push((mixed, w * wk));
                }
            }
            *slot += next
                .iter()
                .map(|&(q, w)| w * (q * q + (1.0 - q) * (1.0 - q)))
                .sum::<f64>();
            states = next;
        }
    }
    for g in 1..=3u64 {
        let rec = s_m_partial_recursive(s0, real as u64, n as u64, g).unwrap();
        assert!((rec - expect[g as usize]).abs() < 1e-14, "g={g}: {rec} vs {}", expect[g as usize]);
    }
}

#[test]
fn absorbed_token_follows_the_start() {
    let p0 = ProbVec::new(vec![0.5, 0.3, 0.2]).unwrap();
    let r = 3000;
    let cfg = ChainConfig::new(p0, Schedule::fully_synthetic(10).unwrap(), 2000, 5).unwrap();
    let summary = run_ensemble(&cfg, r).unwrap();
    assert_eq!(summary.collapsed, r);
    for (got, want) in summary.absorbed_frequencies().iter().zip([0.5, 0.3, 0.2]) {
        let se: f64 = (want * (1.0 - want) / r as f64).sqrt();
        assert!((got - want).abs() <= 4.0 * se);
    }
}

#[test]
fn models_are_unbiased() {
    let p0 = ProbVec::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let opts = EnsembleOptions {
        max_traces: 0,
        track_mean_probs: true,
    };
    let schedules = [
        Schedule::fully_synthetic(6).unwrap(),
        Schedule::partially_synthetic(6, 6).unwrap(),
        Schedule::most_recent(6, 3).unwrap(),
        Schedule::randomly_sampled(6, Default::default()).unwrap(),
    ];
    for schedule in schedules {
        let cfg = ChainConfig::new(p0.clone(), schedule, 10, 3).unwrap();
        let summary = run_ensemble_with(&cfg, 4000, opts).unwrap();
        for m in [1, 4, 10] {
            let mean = summary.generation(m).mean_probs.as_ref().unwrap();
            for (est, &want) in mean.iter().zip(p0.probs()) {
                let se = est.se.unwrap();
                assert!((est.mean - want).abs() <= 4.0 * se.max(1e-3), "{schedule:?} m={m}");
            }
        }
    }
}
