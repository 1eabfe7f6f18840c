use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use tokenpolicy_core::pipeline::audit::audit;
use tokenpolicy_core::pipeline::fixture::write_fixture;
use tokenpolicy_core::pipeline::{rerender, run_stages, PipelineReport, Stages};
use tokenpolicy_core::PipelineConfig;

/// Policy-impact analysis of wealth-distribution time series.
///
/// Log verbosity follows `RUST_LOG` (default `info`).
#[derive(Parser, Debug)]
#[command(name = "tokenpolicy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest and transform every series; write monthly increments.
    Transform(RunArgs),
    /// Engle-Granger screen of every feature/bucket pair.
    Cointegrate(RunArgs),
    /// Global regressions, iterative filtering and cleaned buckets.
    Clean(RunArgs),
    /// Cleaning followed by both Granger-causality variants.
    Causality(RunArgs),
    /// Every stage, then the assembled report.
    Run(RunArgs),
    /// Re-render the text tables of a finished run and audit them.
    Report(ReportArgs),
    /// Write a seeded synthetic dataset and its config.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Sets both the PACF and the X lag limit and drops the sensitivity reruns.
    #[arg(long)]
    max_lag: Option<usize>,
    /// Significance level for regression filtering and table marks.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    t_level: Option<f64>,
    #[arg(long)]
    f_level: Option<f64>,
    /// Critical level of the partial-autocorrelation band.
    #[arg(long)]
    pacf_critical: Option<f64>,
    #[arg(long)]
    skip_cointegration: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Output directory of a previous run.
    #[arg(short, long, required_unless_present = "config")]
    out: Option<PathBuf>,
    /// Config whose output directory holds the run.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(short, long)]
    dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn absolute(p: &Path) -> anyhow::Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

fn load_config(args: &RunArgs) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&args.config).map_err(|e| anyhow::anyhow!("[config] {e}"))?;
    if let Some(out) = &args.out {
        cfg.output.dir = absolute(out)?;
    }
    if let Some(lag) = args.max_lag {
        cfg.granger.pacf_max_lag = lag;
        cfg.granger.x_max_lag = lag;
        cfg.granger.sensitivity_lags.clear();
    }
    if let Some(v) = args.level {
        cfg.significance.level = v;
    }
    if let Some(v) = args.t_level {
        cfg.granger.t_level = v;
    }
    if let Some(v) = args.f_level {
        cfg.granger.f_level = v;
    }
    if let Some(v) = args.pacf_critical {
        cfg.granger.pacf_critical = v;
    }
    if args.skip_cointegration {
        cfg.cointegration.skip = true;
    }
    Ok(cfg)
}

fn run(args: &RunArgs, stages: Stages) -> anyhow::Result<PipelineReport> {
    let cfg = load_config(args)?;
    let rep = run_stages(&cfg, stages)?;
    if let Some(m) = &rep.cointegration {
        for (f, b) in m.non_cointegrated() {
            warn!("`{f}` and `{b}` are not cointegrated at 5%");
        }
    }
    println!(
        "wrote {} files to {}",
        rep.metadata.outputs.len(),
        rep.output_dir.display()
    );
    Ok(rep)
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let dir = match (&args.out, &args.config) {
        (Some(out), _) => out.clone(),
        (None, Some(c)) => PipelineConfig::load(c)
            .map_err(|e| anyhow::anyhow!("[config] {e}"))?
            .output_dir(),
        (None, None) => unreachable!("clap requires one of --out and --config"),
    };
    let written = rerender(&dir).map_err(|e| anyhow::anyhow!("[report] {e}"))?;
    info!("re-rendered {} files", written.len());
    let a = audit(&dir).map_err(|e| anyhow::anyhow!("[report] {e}"))?;
    for m in &a.mismatches {
        eprintln!("mismatch: {m}");
    }
    println!(
        "audit: {} checks, {} mismatches; report at {}",
        a.checks,
        a.mismatches.len(),
        dir.join("report.txt").display()
    );
    if !a.is_clean() {
        bail!("[report] audit found {} mismatches", a.mismatches.len());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Transform(a) => run(&a, Stages::TRANSFORM).map(drop),
        Command::Cointegrate(a) => run(&a, Stages::COINTEGRATION).map(drop),
        Command::Clean(a) => run(&a, Stages::CLEANING).map(drop),
        Command::Causality(a) => run(&a, Stages::CAUSALITY).map(drop),
        Command::Run(a) => {
            let rep = run(&a, Stages::ALL)?;
            println!("report: {}", rep.output_dir.join("report.txt").display());
            Ok(())
        }
        Command::Report(a) => report(&a),
        Command::Fixture(a) => {
            let cfg = write_fixture(&a.dir, a.seed).map_err(|e| anyhow::anyhow!("[fixture] {e}"))?;
            println!("config: {}", cfg.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
