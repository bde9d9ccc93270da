//! Canonical configurations behind the figures and their panels.

use std::path::PathBuf;

use collapse_core::analytics::expected_t_bounds;
use collapse_core::{replicate_rng, run_chain, ChainConfig, ProbVec, RealDataMode, Schedule};
use serde_json::json;
use thiserror::Error;

use crate::config::{BoundsOptions, ExperimentConfig, Format};
use crate::experiment::{collapse_histogram, compute, meta_json, write_all, Computed, RunError};
use crate::initial::{flat_dirichlet, make_initial_distribution, InitialSpec};
use crate::svg::{self, Plot, Series, Style};
use crate::table::ResultTable;

pub const FIGURES: [u32; 5] = [1, 2, 3, 5, 6];

#[derive(Debug, Error)]
pub enum FigureError {
    #[error("unknown figure {0} (available: 1, 2, 3, 5, 6)")]
    UnknownFigure(u32),
    #[error(transparent)]
    Run(#[from] RunError),
}

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub seed: u64,
    /// Overrides the per-panel replicate count (contexts for figure 1).
    pub replicates: Option<u64>,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

pub struct FigureOutput {
    pub table: ResultTable,
    pub written: Vec<PathBuf>,
}

pub fn figure_profile() -> InitialSpec {
    InitialSpec::TwoLevel {
        size: 600,
        support: 52,
        s0: 0.1,
    }
}

fn experiment(
    opts: &FigureOptions,
    schedule: Schedule,
    initial: InitialSpec,
    generations: u64,
    replicates: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        seed: opts.seed,
        replicates: opts.replicates.unwrap_or(replicates),
        max_generations: generations,
        schedule,
        initial,
        bounds: BoundsOptions::default(),
        out_dir: opts.out_dir.clone(),
        formats: vec![Format::Svg],
    }
}

pub fn reproduce_figure(id: u32, opts: &FigureOptions) -> Result<FigureOutput, FigureError> {
    let (table, plots, columns, configs) = match id {
        1 => figure1(opts)?,
        2 => figure2(opts)?,
        3 => figure3(opts)?,
        5 => figure5(opts)?,
        6 => figure6(opts)?,
        other => return Err(FigureError::UnknownFigure(other)),
    };
    let dir = opts.out_dir.join(format!("fig{id}"));
    let run_ids: Vec<String> = {
        let mut ids: Vec<String> = table.rows.iter().map(|r| r.run_id.clone()).collect();
        ids.dedup();
        ids
    };
    let mut files = Vec::new();
    if opts.formats.contains(&Format::Csv) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf).map_err(RunError::from)?;
        files.push(("data.csv".to_owned(), buf));
    }
    if opts.formats.contains(&Format::Json) {
        let mut buf = serde_json::to_vec_pretty(&json!({
            "figure": id,
            "runs": configs,
            "rows": table.rows,
        }))
        .map_err(|e| RunError::from(crate::table::TableError::from(e)))?;
        buf.push(b'\n');
        files.push(("data.json".to_owned(), buf));
    }
    if opts.formats.contains(&Format::Svg) {
        let mut note = format!("figure {id}; run_ids {}", run_ids.join(" "));
        if id == 1 {
            note.push_str("; initial distributions are symmetric Dirichlet(1) stand-ins");
        }
        files.push((
            "figure.svg".to_owned(),
            svg::render_grid(&plots, columns, &note).into_bytes(),
        ));
    }
    let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    files.push((
        "run_meta.json".to_owned(),
        meta_json(&run_ids.join(","), &json!({ "figure": id, "runs": configs }), &names),
    ));
    let written = write_all(&dir, &files)?;
    Ok(FigureOutput { table, written })
}

type Panels = (ResultTable, Vec<Plot>, usize, Vec<serde_json::Value>);

fn run_config(cfg: &ExperimentConfig) -> Result<(Computed, serde_json::Value), RunError> {
    let c = compute(cfg)?;
    let desc = json!({ "run_id": c.run_id, "config": cfg });
    Ok((c, desc))
}

fn trace_series(values: &[f64]) -> Vec<(f64, f64)> {
    values
        .iter()
        .enumerate()
        .map(|(i, &y)| ((i + 1) as f64, y))
        .collect()
}

fn sigma_panel(c: &Computed, title: &str, with_formula: bool) -> Plot {
    let mut p = Plot::new(title, "generation m", "sigma_m");
    for tr in &c.summary.traces {
        p.add(Series::new(trace_series(&tr.sigma), Style::TRACE));
    }
    let mean = c
        .summary
        .generations
        .iter()
        .map(|g| (g.generation as f64, g.sigma.mean))
        .collect();
    p.add(Series::new(mean, Style::MEAN).labelled("mean"));
    if with_formula {
        if let Ok(rep) = &c.report {
            let f = rep
                .s_m
                .iter()
                .filter(|x| x.generation >= 1)
                .map(|x| (x.generation as f64, x.formula))
                .collect();
            p.add(Series::new(f, Style::FORMULA).labelled("S_m formula"));
        }
    }
    p
}

fn drift_panel(c: &Computed, title: &str) -> Plot {
    let mut p = Plot::new(title, "generation m", "||p(m) - p(1)||_1");
    for tr in &c.summary.traces {
        p.add(Series::new(trace_series(&tr.l1_to_gen1), Style::TRACE));
    }
    let mean = c
        .summary
        .generations
        .iter()
        .map(|g| (g.generation as f64, g.l1_to_gen1.mean))
        .collect();
    p.add(Series::new(mean, Style::MEAN).labelled("mean"));
    p
}

fn profile_panel(p0: &ProbVec, title: &str) -> Plot {
    let mut p = Plot::new(title, "token i", "p_i");
    p.log_y = true;
    let pts = p0
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(i, &q)| ((i + 1) as f64, q))
        .collect();
    p.add(Series::new(pts, Style::POINTS));
    p
}

/// Simplex trajectories for `s = 3` across the 81 contexts of length 4.
fn figure1(opts: &FigureOptions) -> Result<Panels, RunError> {
    const SNAPSHOTS: [u64; 4] = [1, 10, 100, 1000];
    let contexts = opts.replicates.unwrap_or(81);
    let n = 1000;
    let generations = *SNAPSHOTS.last().unwrap();
    let schedule = Schedule::fully_synthetic(n).map_err(collapse_core::SimError::from)?;
    let mut table = ResultTable::new();
    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::new(); SNAPSHOTS.len() + 1];
    let mut starts = Vec::new();
    // contexts draw their p0 from a stream separate from the chain streams
    let mut prior = replicate_rng(opts.seed ^ 0x5eed_f161, 0);
    for _ in 0..contexts {
        starts.push(flat_dirichlet(3, &mut prior));
    }
    let cfg_desc = json!({
        "seed": opts.seed,
        "contexts": contexts,
        "schedule": schedule,
        "max_generations": generations,
        "initial": "symmetric Dirichlet(1) per context, a stand-in",
    });
    let run_id = {
        use sha2::{Digest, Sha256};
        hex::encode(&Sha256::digest(cfg_desc.to_string().as_bytes())[..8])
    };
    let ternary = |p: &[f64]| (p[1] + p[2] / 2.0, p[2] * 3f64.sqrt() / 2.0);
    for (ctx, p0) in starts.iter().enumerate() {
        let chain = ChainConfig::new(p0.clone(), schedule, generations, opts.seed)?;
        let tr = run_chain(&chain, ctx as u64)?;
        for k in 0..3 {
            table.push(&run_id, Some(0), &format!("context_{ctx}_p{k}"), Some(p0.probs()[k]), None);
        }
        points[0].push(ternary(p0.probs()));
        for (i, &m) in SNAPSHOTS.iter().enumerate() {
            let q = tr.record(m).probs(3);
            for (k, v) in q.iter().enumerate() {
                table.push(&run_id, Some(m), &format!("context_{ctx}_p{k}"), Some(*v), None);
            }
            points[i + 1].push(ternary(&q));
        }
    }
    let triangle = vec![(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0), (0.0, 0.0)];
    let mut plots = Vec::new();
    let labels = std::iter::once(0).chain(SNAPSHOTS);
    for (pts, m) in points.into_iter().zip(labels) {
        let mut p = Plot::new(format!("generation {m}"), "", "");
        p.y_range = Some((0.0, 0.9));
        p.add(Series::new(triangle.clone(), Style::BARS));
        p.add(Series::new(pts, Style::POINTS));
        plots.push(p);
    }
    Ok((table, plots, 5, vec![json!({ "run_id": run_id, "config": cfg_desc })]))
}

pub const FIG2_SAMPLE_SIZES: [u64; 9] = [10, 50, 100, 150, 200, 250, 300, 350, 400];

pub fn fig2_profiles() -> Vec<InitialSpec> {
    vec![
        figure_profile(),
        InitialSpec::TwoLevel {
            size: 600,
            support: 200,
            s0: 0.05,
        },
        InitialSpec::TwoLevel {
            size: 600,
            support: 10,
            s0: 0.3,
        },
    ]
}

/// Generation cap generous enough that every replicate collapses.
pub fn collapse_horizon(n: u64) -> u64 {
    60 * n + 200
}

fn figure2(opts: &FigureOptions) -> Result<Panels, RunError> {
    let mut table = ResultTable::new();
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    let mut configs = Vec::new();
    for spec in fig2_profiles() {
        let p0 = make_initial_distribution(&spec)?;
        let (s0, support) = (p0.sigma(), p0.support_size());
        top.push(profile_panel(&p0, &format!("S0 = {s0:.3}, support {support}")));
        let mut plot = Plot::new(format!("S0 = {s0:.3}"), "sample size n", "mean collapse time");
        let mut measured = Vec::new();
        let mut lower = Vec::new();
        for &n in &FIG2_SAMPLE_SIZES {
            let schedule = Schedule::fully_synthetic(n).map_err(collapse_core::SimError::from)?;
            let mut cfg = experiment(opts, schedule, spec.clone(), collapse_horizon(n), 100);
            cfg.formats.clear();
            let (c, desc) = run_config(&cfg)?;
            configs.push(desc);
            table.extend(collapse_rows(&c));
            if let Some(t) = c.summary.mean_collapse_time() {
                measured.push((n as f64, t));
            }
            let b = expected_t_bounds(s0, n, support)?;
            lower.push((n as f64, b.lower));
        }
        plot.add(Series::new(measured, Style::POINTS).labelled("mean T"));
        plot.add(Series::new(lower, Style::BOUND).labelled("lower bound"));
        bottom.push(plot);
    }
    let columns = top.len();
    top.extend(bottom);
    Ok((table, top, columns, configs))
}

/// Only the run-level rows; per-generation rows of long runs are noise here.
fn collapse_rows(c: &Computed) -> ResultTable {
    let mut t = ResultTable::new();
    for r in &c.table.rows {
        if r.generation.is_none() && !r.metric.starts_with("absorbed_frequency") {
            t.rows.push(r.clone());
        }
    }
    t
}

pub const FIG3_SYNTHETIC: [u64; 3] = [10, 100, 1000];

fn figure3(opts: &FigureOptions) -> Result<Panels, RunError> {
    let mut table = ResultTable::new();
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    let mut configs = Vec::new();
    for &n in &FIG3_SYNTHETIC {
        let schedule = Schedule::partially_synthetic(100, n).map_err(collapse_core::SimError::from)?;
        let cfg = experiment(opts, schedule, figure_profile(), 50, 100);
        let (c, desc) = run_config(&cfg)?;
        configs.push(desc);
        top.push(sigma_panel(&c, &format!("N = 100, n = {n}"), true));
        bottom.push(drift_panel(&c, &format!("N = 100, n = {n}")));
        table.extend(c.table);
    }
    top.extend(bottom);
    Ok((table, top, 3, configs))
}

pub fn fig5_schedules() -> Vec<(String, Schedule)> {
    let mut v: Vec<(String, Schedule)> = [1u64, 4, 16]
        .iter()
        .map(|&k| (format!("window K = {k}"), Schedule::most_recent(10, k).unwrap()))
        .collect();
    v.push((
        "randomly sampled".to_owned(),
        Schedule::randomly_sampled(10, RealDataMode::Fresh).unwrap(),
    ));
    v
}

fn figure5(opts: &FigureOptions) -> Result<Panels, RunError> {
    let mut table = ResultTable::new();
    let mut rows: [Vec<Plot>; 3] = Default::default();
    let mut configs = Vec::new();
    for (label, schedule) in fig5_schedules() {
        let cfg = experiment(opts, schedule, figure_profile(), 500, 100);
        let (c, desc) = run_config(&cfg)?;
        configs.push(desc);
        rows[0].push(sigma_panel(&c, &label, false));
        rows[1].push(drift_panel(&c, &label));
        rows[2].push(collapse_histogram(&c.summary, &label));
        table.extend(c.table);
    }
    let [a, b, h] = rows;
    Ok((table, a.into_iter().chain(b).chain(h).collect(), 4, configs))
}

pub const FIG6_S0: [f64; 3] = [0.1, 0.5, 0.9];

fn figure6(opts: &FigureOptions) -> Result<Panels, RunError> {
    let mut table = ResultTable::new();
    let mut rows: [Vec<Plot>; 3] = Default::default();
    let mut configs = Vec::new();
    for &s0 in &FIG6_S0 {
        let spec = InitialSpec::TwoLevel {
            size: 600,
            support: 52,
            s0,
        };
        let schedule = Schedule::partially_synthetic(100, 10).map_err(collapse_core::SimError::from)?;
        let cfg = experiment(opts, schedule, spec, 50, 100);
        let (c, desc) = run_config(&cfg)?;
        configs.push(desc);
        rows[0].push(profile_panel(&c.initial, &format!("S0 = {s0}")));
        rows[1].push(sigma_panel(&c, &format!("S0 = {s0}"), true));
        rows[2].push(drift_panel(&c, &format!("S0 = {s0}")));
        table.extend(c.table);
    }
    let [a, b, d] = rows;
    Ok((table, a.into_iter().chain(b).chain(d).collect(), 3, configs))
}
