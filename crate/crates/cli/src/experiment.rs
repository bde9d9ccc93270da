//! Running a configured experiment and writing its outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use collapse_core::analytics::{AnalyticsError, BoundsReport, BoundsRequest};
use collapse_core::ensemble::run_ensemble_with;
use collapse_core::{ChainConfig, EnsembleOptions, EnsembleSummary, ProbVec, Schedule, SimError};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::config::{ExperimentConfig, Format};
use crate::initial::{make_initial_distribution, InitialError};
use crate::svg::{self, Plot, Series, Style};
use crate::table::{ResultTable, TableError};

/// Traces kept for plots.
pub const PLOTTED_TRACES: u64 = 100;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Initial(#[from] InitialError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("cannot write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Problems with the requested experiment rather than with running it.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            RunError::Initial(_)
                | RunError::Analytics(_)
                | RunError::Sim(SimError::InvalidConfig(_) | SimError::Schedule(_))
        )
    }
}

pub fn bounds_request(
    cfg: &ExperimentConfig,
    p0: &ProbVec,
    simulated_lambda1: Option<f64>,
) -> BoundsRequest {
    BoundsRequest {
        schedule: cfg.schedule,
        s0: p0.sigma(),
        alphabet: p0.len(),
        support: p0.support_size(),
        generations: cfg.max_generations,
        epsilon: cfg.bounds.epsilon,
        expected_lambda1: cfg.bounds.expected_lambda1.or(simulated_lambda1),
    }
}

/// Closed-form rows of a bounds report.
pub fn bounds_table(run_id: &str, report: &BoundsReport) -> ResultTable {
    let mut t = ResultTable::new();
    for p in &report.s_m {
        t.push(run_id, Some(p.generation), "s_m_formula", Some(p.formula), None);
        if let Some(r) = p.recursion {
            t.push(run_id, Some(p.generation), "s_m_recursion", Some(r), None);
        }
    }
    for b in &report.rho_bounds {
        t.push(run_id, Some(b.generation), "rho_lower", Some(b.lower), None);
        t.push(run_id, Some(b.generation), "rho_upper", Some(b.upper), None);
    }
    if let Some(tb) = report.t_bounds {
        t.push(run_id, None, "t_lower", Some(tb.lower), None);
        t.push(run_id, None, "t_upper", Some(tb.upper), None);
    }
    if let Some(mx) = report.mixing {
        t.push(run_id, None, "alpha", Some(mx.alpha), None);
        t.push(run_id, None, "beta", Some(mx.beta), None);
    }
    if let Some(g) = report.g_n {
        t.push(run_id, None, "g_n", Some(g.value), None);
        t.push(run_id, None, "ln_g_n", Some(g.ln_value), None);
    }
    if let Some(d) = report.deviation {
        t.push(run_id, None, "deviation_bound", Some(d.value), None);
    }
    if let Some(d) = report.general_deviation {
        t.push(run_id, None, "zeta", Some(d.zeta), None);
        t.push(run_id, None, "deviation_bound_general", Some(d.bound.value), None);
    }
    if let Some(b) = report.max_n {
        t.push(run_id, None, "max_synthetic_n", Some(b.n as f64), None);
    }
    t
}

/// Ensemble rows: per-generation means with standard errors, then
/// run-level collapse statistics.
pub fn ensemble_table(run_id: &str, s: &EnsembleSummary) -> ResultTable {
    let mut t = ResultTable::new();
    let r = s.replicates as f64;
    for g in &s.generations {
        let m = Some(g.generation);
        t.push(run_id, m, "sigma", Some(g.sigma.mean), g.sigma.se);
        t.push(run_id, m, "sup_norm", Some(g.sup.mean), g.sup.se);
        t.push(run_id, m, "l1_to_gen0", Some(g.l1_to_gen0.mean), g.l1_to_gen0.se);
        t.push(run_id, m, "l1_to_gen1", Some(g.l1_to_gen1.mean), g.l1_to_gen1.se);
        let se = (s.replicates > 1).then(|| (g.rho * (1.0 - g.rho) / r).sqrt());
        t.push(run_id, m, "rho", Some(g.rho), se);
    }
    t.push(run_id, None, "replicates", Some(r), None);
    t.push(run_id, None, "collapsed_fraction", Some(s.collapsed as f64 / r), None);
    let times: Vec<f64> = s
        .collapse_histogram
        .iter()
        .flat_map(|(&tm, &c)| std::iter::repeat_n(tm as f64, c as usize))
        .collect();
    let (mean, se) = mean_se(&times);
    t.push(run_id, None, "collapse_time_mean", mean, se);
    t.push(run_id, None, "gen1_lambda", Some(s.gen1_lambda.mean), s.gen1_lambda.se);
    for (token, &c) in s.absorbed_counts.iter().enumerate() {
        if c > 0 {
            t.push(
                run_id,
                None,
                &format!("absorbed_frequency_{token}"),
                Some(c as f64 / r),
                None,
            );
        }
    }
    t
}

fn mean_se(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.len() > 1).then(|| {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    (Some(mean), se)
}

pub struct Computed {
    pub run_id: String,
    pub initial: ProbVec,
    pub summary: EnsembleSummary,
    pub report: Result<BoundsReport, AnalyticsError>,
    pub table: ResultTable,
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Computed, RunError> {
    let run_id = cfg.hash();
    let initial = make_initial_distribution(&cfg.initial)?;
    let chain = ChainConfig::new(initial.clone(), cfg.schedule, cfg.max_generations, cfg.seed)?;
    let opts = EnsembleOptions {
        max_traces: if cfg.wants(Format::Svg) { PLOTTED_TRACES } else { 0 },
        track_mean_probs: false,
    };
    let summary = run_ensemble_with(&chain, cfg.replicates, opts)?;
    let lambda = matches!(cfg.schedule, Schedule::PartiallySynthetic { .. })
        .then_some(summary.gen1_lambda.mean);
    let report = BoundsReport::evaluate(&bounds_request(cfg, &initial, lambda));
    let mut table = ensemble_table(&run_id, &summary);
    if let Ok(rep) = &report {
        table.extend(bounds_table(&run_id, rep));
    }
    Ok(Computed {
        run_id,
        initial,
        summary,
        report,
        table,
    })
}

fn report_json(run_id: &str, report: &Result<BoundsReport, AnalyticsError>) -> serde_json::Value {
    match report {
        Ok(r) => json!({ "run_id": run_id, "report": r }),
        Err(e) => json!({ "run_id": run_id, "error": e.to_string() }),
    }
}

/// Writes every file or none: on any failure the files already written are
/// removed again.
pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(source) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(RunError::Io { path, source });
        }
        written.push(path);
    }
    Ok(written)
}

pub fn meta_json(run_id: &str, cfg: &impl Serialize, files: &[String]) -> Vec<u8> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "run_id": run_id,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "created_unix": now,
        "config": cfg,
        "files": files,
    });
    let mut bytes = serde_json::to_vec_pretty(&meta).expect("meta serialises");
    bytes.push(b'\n');
    bytes
}

pub struct ExperimentResult {
    pub computed: Computed,
    pub written: Vec<PathBuf>,
}

/// Runs the ensemble, evaluates the closed forms and writes
/// `results.{csv,json}`, `bounds.json`, `plot.svg` and `run_meta.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let computed = compute(cfg)?;
    let files = render_files(cfg, &computed)?;
    let written = write_all(&cfg.out_dir, &files)?;
    Ok(ExperimentResult { computed, written })
}

fn render_files(cfg: &ExperimentConfig, c: &Computed) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let mut files = Vec::new();
    if cfg.wants(Format::Csv) {
        let mut buf = Vec::new();
        c.table.write_csv(&mut buf)?;
        files.push(("results.csv".to_owned(), buf));
    }
    if cfg.wants(Format::Json) {
        let doc = json!({
            "run_id": c.run_id,
            "config": cfg,
            "rows": c.table.rows,
        });
        let mut buf = serde_json::to_vec_pretty(&doc).map_err(TableError::from)?;
        buf.push(b'\n');
        files.push(("results.json".to_owned(), buf));
    }
    let mut buf = serde_json::to_vec_pretty(&report_json(&c.run_id, &c.report)).map_err(TableError::from)?;
    buf.push(b'\n');
    files.push(("bounds.json".to_owned(), buf));
    if cfg.wants(Format::Svg) {
        let plots = experiment_plots(cfg, c);
        let note = format!("run_id {}", c.run_id);
        files.push(("plot.svg".to_owned(), svg::render_grid(&plots, 2, &note).into_bytes()));
    }
    let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    files.push(("run_meta.json".to_owned(), meta_json(&c.run_id, cfg, &names)));
    Ok(files)
}

fn experiment_plots(cfg: &ExperimentConfig, c: &Computed) -> Vec<Plot> {
    let s = &c.summary;
    let gens = |f: &dyn Fn(&collapse_core::GenerationSummary) -> f64| -> Vec<(f64, f64)> {
        s.generations.iter().map(|g| (g.generation as f64, f(g))).collect()
    };
    let mut sigma = Plot::new("sigma_m", "generation m", "sigma_m");
    let mut drift = Plot::new("||p(m) - p(1)||_1", "generation m", "L1 to generation 1");
    for tr in &s.traces {
        let pts = |v: &[f64]| v.iter().enumerate().map(|(i, &y)| ((i + 1) as f64, y)).collect();
        sigma.add(Series::new(pts(&tr.sigma), Style::TRACE));
        drift.add(Series::new(pts(&tr.l1_to_gen1), Style::TRACE));
    }
    sigma.add(Series::new(gens(&|g| g.sigma.mean), Style::MEAN).labelled("mean"));
    drift.add(Series::new(gens(&|g| g.l1_to_gen1.mean), Style::MEAN).labelled("mean"));
    let mut plots = Vec::new();
    if let Ok(rep) = &c.report {
        let formula: Vec<(f64, f64)> = rep
            .s_m
            .iter()
            .filter(|p| p.generation >= 1)
            .map(|p| (p.generation as f64, p.formula))
            .collect();
        if !formula.is_empty() {
            sigma.add(Series::new(formula, Style::FORMULA).labelled("S_m formula"));
        }
        if let Some(d) = rep.deviation.filter(|d| !d.vacuous) {
            drift.add(
                Series::new(
                    vec![(2.0, d.value), (cfg.max_generations as f64, d.value)],
                    Style::BOUND,
                )
                .labelled("bound"),
            );
        }
        plots.push(sigma);
        plots.push(drift);
        if !rep.rho_bounds.is_empty() {
            let mut rho = Plot::new("P(collapsed by m)", "generation m", "rho_m");
            rho.y_range = Some((0.0, 1.0));
            rho.add(Series::new(gens(&|g| g.rho), Style::MEAN).labelled("empirical"));
            let b = |f: fn(&collapse_core::analytics::RhoBounds) -> f64| {
                rep.rho_bounds
                    .iter()
                    .filter(|b| b.generation >= 1)
                    .map(|x| (x.generation as f64, f(x)))
                    .collect()
            };
            rho.add(Series::new(b(|x| x.lower), Style::BOUND).labelled("bounds"));
            rho.add(Series::new(b(|x| x.upper), Style::BOUND));
            plots.push(rho);
        }
    } else {
        plots.push(sigma);
        plots.push(drift);
    }
    if s.collapsed > 0 {
        plots.push(collapse_histogram(s, "collapse time T"));
    }
    plots
}

pub fn collapse_histogram(s: &EnsembleSummary, title: &str) -> Plot {
    let mut h = Plot::new(title, "T", "replicates");
    let max_t = s.collapse_histogram.keys().copied().max().unwrap_or(1);
    let width = (max_t as f64 / 30.0).ceil().max(1.0);
    let mut bins = std::collections::BTreeMap::<u64, f64>::new();
    for (&t, &c) in &s.collapse_histogram {
        *bins.entry(((t as f64 - 1.0) / width) as u64).or_default() += c as f64;
    }
    let bars: Vec<(f64, f64)> = bins
        .into_iter()
        .map(|(b, c)| (1.0 + b as f64 * width, c))
        .collect();
    h.add(Series::new(svg::histogram_outline(&bars, width), Style::BARS));
    if let Some(mean) = s.mean_collapse_time() {
        let top = bars.iter().map(|b| b.1).fold(1.0, f64::max);
        h.add(Series::new(vec![(mean, 0.0), (mean, top)], Style::MEAN).labelled("mean T"));
    }
    h
}

/// Closed forms only; no simulation.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<(String, BoundsReport, Vec<PathBuf>), RunError> {
    let run_id = cfg.hash();
    let p0 = make_initial_distribution(&cfg.initial)?;
    let report = BoundsReport::evaluate(&bounds_request(cfg, &p0, None))?;
    let table = bounds_table(&run_id, &report);
    let mut files = Vec::new();
    if cfg.wants(Format::Csv) {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        files.push(("bounds.csv".to_owned(), buf));
    }
    let mut buf = serde_json::to_vec_pretty(&report_json(&run_id, &Ok(report.clone())))
        .map_err(TableError::from)?;
    buf.push(b'\n');
    files.push(("bounds.json".to_owned(), buf));
    let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
    files.push(("run_meta.json".to_owned(), meta_json(&run_id, cfg, &names)));
    let written = write_all(&cfg.out_dir, &files)?;
    Ok((run_id, report, written))
}
