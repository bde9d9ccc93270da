//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string; errors surface as JS exceptions.

use collapse_core::analytics::{
    deviation_bound, expected_t_bounds, rho_bounds, s_m_fully, s_m_partial,
};
use collapse_core::{run_chain, run_ensemble, ChainConfig, ProbVec, Schedule};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_WORK: u64 = 50_000_000;

#[derive(Debug)]
pub struct DemoError(String);

impl std::fmt::Display for DemoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err(e: impl std::fmt::Display) -> DemoError {
    DemoError(e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, DemoError> {
    serde_json::to_string(v).map_err(err)
}

fn check_work(replicates: u64, generations: u64, n: u64) -> Result<(), DemoError> {
    let work = replicates.saturating_mul(generations).saturating_mul(n.max(1));
    if work > MAX_WORK {
        return Err(DemoError(format!(
            "replicates x generations x n = {work} exceeds the demo limit {MAX_WORK}"
        )));
    }
    Ok(())
}

/// One heavy token and `support - 1` equal light ones, with collision
/// probability `s0`.
pub fn two_level(size: usize, support: usize, s0: f64) -> Result<ProbVec, DemoError> {
    if support < 2 || support > size {
        return Err(DemoError(format!("support must lie in 2..={size}")));
    }
    let k = support as f64;
    if !(s0 >= 1.0 / k - 1e-12 && s0 < 1.0) {
        return Err(DemoError(format!("s0 must lie in [1/{support}, 1)")));
    }
    let heavy = (1.0 + ((k - 1.0) * (k * s0 - 1.0)).max(0.0).sqrt()) / k;
    let light = (1.0 - heavy) / (k - 1.0);
    let mut probs = vec![0.0; size];
    probs[0] = heavy;
    probs[1..support].fill(light);
    ProbVec::new(probs).map_err(err)
}

#[derive(Serialize)]
pub struct SimplexPaths {
    pub initial: Vec<f64>,
    /// `paths[c][m]` is chain `c` at generation `m`, starting from the initial model.
    pub paths: Vec<Vec<[f64; 3]>>,
    pub collapse_times: Vec<Option<u64>>,
}

pub fn simplex_paths_impl(
    p0: [f64; 3],
    n: u64,
    generations: u64,
    chains: u64,
    seed: u64,
) -> Result<SimplexPaths, DemoError> {
    check_work(chains, generations, n)?;
    let initial = ProbVec::new(p0.to_vec()).map_err(err)?;
    let schedule = Schedule::fully_synthetic(n).map_err(err)?;
    let cfg = ChainConfig::new(initial.clone(), schedule, generations, seed).map_err(err)?;
    let mut paths = Vec::new();
    let mut collapse_times = Vec::new();
    for c in 0..chains {
        let t = run_chain(&cfg, c).map_err(err)?;
        let mut path = vec![p0];
        for m in 1..=generations {
            let p = t.record(m).probs(3);
            path.push([p[0], p[1], p[2]]);
        }
        paths.push(path);
        collapse_times.push(t.collapse_time);
    }
    Ok(SimplexPaths {
        initial: initial.probs().to_vec(),
        paths,
        collapse_times,
    })
}

/// Fully synthetic chains on three tokens, for plotting on the simplex.
#[wasm_bindgen]
pub fn simplex_paths(
    p0: Vec<f64>,
    n: u32,
    generations: u32,
    chains: u32,
    seed: u32,
) -> Result<String, JsError> {
    let p0: [f64; 3] = p0
        .try_into()
        .map_err(|_| JsError::new("expected three probabilities"))?;
    let out = simplex_paths_impl(p0, n.into(), generations.into(), chains.into(), seed.into())?;
    Ok(to_json(&out)?)
}

#[derive(Serialize)]
pub struct CollapseCurves {
    pub generation: Vec<u64>,
    pub sigma_mean: Vec<f64>,
    pub sigma_formula: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_lower: Vec<f64>,
    pub rho_upper: Vec<f64>,
    pub collapsed: u64,
    pub replicates: u64,
    pub mean_collapse_time: Option<f64>,
    pub t_lower: f64,
    pub t_upper: f64,
}

pub fn collapse_curves_impl(
    size: usize,
    support: usize,
    s0: f64,
    n: u64,
    generations: u64,
    replicates: u64,
    seed: u64,
) -> Result<CollapseCurves, DemoError> {
    check_work(replicates, generations, n)?;
    let p0 = two_level(size, support, s0)?;
    let s0 = p0.sigma();
    let cfg = ChainConfig::new(p0, Schedule::fully_synthetic(n).map_err(err)?, generations, seed)
        .map_err(err)?;
    let summary = run_ensemble(&cfg, replicates).map_err(err)?;
    let t = expected_t_bounds(s0, n, support).map_err(err)?;
    let mut out = CollapseCurves {
        generation: Vec::new(),
        sigma_mean: Vec::new(),
        sigma_formula: Vec::new(),
        rho: Vec::new(),
        rho_lower: Vec::new(),
        rho_upper: Vec::new(),
        collapsed: summary.collapsed,
        replicates: summary.replicates,
        mean_collapse_time: summary.mean_collapse_time(),
        t_lower: t.lower,
        t_upper: t.upper,
    };
    for g in &summary.generations {
        let b = rho_bounds(s0, n, support, g.generation).map_err(err)?;
        out.generation.push(g.generation);
        out.sigma_mean.push(g.sigma.mean);
        out.sigma_formula.push(s_m_fully(s0, n, g.generation).map_err(err)?);
        out.rho.push(g.rho);
        out.rho_lower.push(b.lower.max(0.0));
        out.rho_upper.push(b.upper.min(1.0));
    }
    Ok(out)
}

/// Fully synthetic ensemble against the closed-form collision probability
/// and collapse-probability bounds.
#[wasm_bindgen]
pub fn collapse_curves(
    size: u32,
    support: u32,
    s0: f64,
    n: u32,
    generations: u32,
    replicates: u32,
    seed: u32,
) -> Result<String, JsError> {
    let out = collapse_curves_impl(
        size as usize,
        support as usize,
        s0,
        n.into(),
        generations.into(),
        replicates.into(),
        seed.into(),
    )?;
    Ok(to_json(&out)?)
}

#[derive(Serialize)]
pub struct DriftCurves {
    pub generation: Vec<u64>,
    pub drift_mean: Vec<f64>,
    pub drift_se: Vec<Option<f64>>,
    pub sigma_mean: Vec<f64>,
    pub sigma_formula: Vec<f64>,
    pub bound: f64,
    pub bound_vacuous: bool,
}

pub fn drift_curves_impl(
    size: usize,
    support: usize,
    s0: f64,
    real: u64,
    n: u64,
    generations: u64,
    replicates: u64,
    seed: u64,
) -> Result<DriftCurves, DemoError> {
    check_work(replicates, generations, n + real)?;
    let p0 = two_level(size, support, s0)?;
    let s0 = p0.sigma();
    let schedule = Schedule::partially_synthetic(real, n).map_err(err)?;
    let cfg = ChainConfig::new(p0, schedule, generations, seed).map_err(err)?;
    let summary = run_ensemble(&cfg, replicates).map_err(err)?;
    let bound = deviation_bound(real, n, size).map_err(err)?;
    let mut out = DriftCurves {
        generation: Vec::new(),
        drift_mean: Vec::new(),
        drift_se: Vec::new(),
        sigma_mean: Vec::new(),
        sigma_formula: Vec::new(),
        bound: bound.value,
        bound_vacuous: bound.vacuous,
    };
    for g in &summary.generations {
        out.generation.push(g.generation);
        out.drift_mean.push(g.l1_to_gen1.mean);
        out.drift_se.push(g.l1_to_gen1.se);
        out.sigma_mean.push(g.sigma.mean);
        out.sigma_formula.push(s_m_partial(s0, real, n, g.generation).map_err(err)?);
    }
    Ok(out)
}

/// Partially synthetic ensemble: drift from the first model against the
/// deviation bound.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn drift_curves(
    size: u32,
    support: u32,
    s0: f64,
    real: u32,
    n: u32,
    generations: u32,
    replicates: u32,
    seed: u32,
) -> Result<String, JsError> {
    let out = drift_curves_impl(
        size as usize,
        support as usize,
        s0,
        real.into(),
        n.into(),
        generations.into(),
        replicates.into(),
        seed.into(),
    )?;
    Ok(to_json(&out)?)
}

impl std::error::Error for DemoError {}
