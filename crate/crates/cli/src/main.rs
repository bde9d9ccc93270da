use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use collapse_cli::config::{ConfigError, ExperimentConfig, Format};
use collapse_cli::experiment::{run_bounds, run_experiment, RunError};
use collapse_cli::figures::{reproduce_figure, FigureError, FigureOptions};
use collapse_cli::{bench, softmax_check};

#[derive(Parser)]
#[command(name = "collapse", version, about = "Model collapse simulations and bounds")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicates per ensemble; overrides the config file.
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output formats, comma separated (csv, json, svg).
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble described by a config file.
    Simulate { config: PathBuf },
    /// Evaluate the closed-form predictions for a config file.
    Bounds { config: PathBuf },
    /// Regenerate the data and panels of a figure (1, 2, 3, 5 or 6).
    ReproduceFig { id: u32 },
    /// Verify that softmax training recovers empirical frequencies.
    SoftmaxCheck,
    /// Time the sampler and a few ensembles.
    Bench,
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.into())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<FigureError> for Failure {
    fn from(e: FigureError) -> Self {
        match e {
            FigureError::UnknownFigure(_) => Failure::Validation(e.into()),
            FigureError::Run(r) => r.into(),
        }
    }
}

fn load(cli: &Cli, path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(r) = cli.replicates {
        if r == 0 {
            return Err(ConfigError::validation("--replicates", "must be at least 1").into());
        }
        cfg.replicates = r;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if !cli.format.is_empty() {
        cfg.formats = cli.format.clone();
        cfg.formats.sort();
        cfg.formats.dedup();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { config } => {
            let cfg = load(cli, config)?;
            let res = run_experiment(&cfg)?;
            let s = &res.computed.summary;
            println!(
                "run {}: {} replicates x {} generations, collapsed {}/{}",
                res.computed.run_id, s.replicates, s.max_generations, s.collapsed, s.replicates
            );
            if let Err(e) = &res.computed.report {
                eprintln!("closed forms unavailable: {e}");
            }
            for p in &res.written {
                println!("wrote {}", p.display());
            }
        }
        Command::Bounds { config } => {
            let cfg = load(cli, config)?;
            let (run_id, report, written) = run_bounds(&cfg)?;
            println!("run {run_id}");
            if let Some(t) = report.t_bounds {
                println!("E[T] in [{}, {}]", t.lower, t.upper);
            }
            if let Some(d) = report.deviation {
                println!(
                    "deviation bound {}{}",
                    d.value,
                    if d.vacuous { " (vacuous)" } else { "" }
                );
            }
            if let Some(b) = report.max_n {
                println!("max synthetic n {}", b.n);
            }
            if let Some(note) = &report.max_n_note {
                println!("max synthetic n unavailable: {note}");
            }
            for p in &written {
                println!("wrote {}", p.display());
            }
        }
        Command::ReproduceFig { id } => {
            let opts = FigureOptions {
                seed: cli.seed.unwrap_or(0),
                replicates: cli.replicates.filter(|&r| r > 0),
                out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
                formats: if cli.format.is_empty() {
                    vec![Format::Csv, Format::Json, Format::Svg]
                } else {
                    cli.format.clone()
                },
            };
            if cli.replicates == Some(0) {
                return Err(ConfigError::validation("--replicates", "must be at least 1").into());
            }
            let out = reproduce_figure(*id, &opts)?;
            for p in &out.written {
                println!("wrote {}", p.display());
            }
        }
        Command::SoftmaxCheck => {
            let data = softmax_check::reference_dataset();
            let report = softmax_check::run_check(&data, 2.0, 200_000)
                .context("softmax check")
                .map_err(Failure::Runtime)?;
            if cli.format.contains(&Format::Json) {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
            } else {
                println!("iterations        {}", report.iterations);
                println!("gradient norm     {:e}", report.final_grad_norm);
                for (j, g) in report.row_l1_gaps.iter().enumerate() {
                    println!("row {j} L1 gap      {g:e}");
                }
                println!("finite-diff error {:e}", report.fd_max_rel_error);
            }
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!("softmax-check {verdict}");
            if !report.passed() {
                return Err(Failure::Runtime(anyhow::anyhow!("softmax check failed")));
            }
        }
        Command::Bench => {
            let rows = bench::run_bench(cli.seed.unwrap_or(0), cli.replicates.unwrap_or(50).max(1))
                .map_err(Failure::Runtime)?;
            if cli.format.contains(&Format::Json) {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialise"));
            } else {
                print!("{}", bench::format_rows(&rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
