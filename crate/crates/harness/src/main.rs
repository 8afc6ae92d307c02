use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qim_harness::commands::{kubo_table, norms_table, taylor_table, transport_table};
use qim_harness::{emit_report, run_suite, Format, HarnessError, RunConfig, THREADS_ENV};

#[derive(Parser)]
#[command(name = "qim", version, about = "Verification runs for perturbed Gibbs states and Kubo functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the seed list of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces output_dir of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write a report; exits 1 if any check fails.
    Verify(Common),
    /// Kubo n-point functions of the ensemble with Monte-Carlo cross-checks.
    Kubo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Taylor partial sums of the free energy against direct values.
    Taylor(Common),
    /// ε-norm scans of the ensemble perturbations.
    Norms(Common),
    /// Chart transitions and their equivalence constants.
    Transport(Common),
}

fn load(c: &Common) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<(), HarnessError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| HarnessError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    init_threads()?;
    let (common, table) = match &cli.command {
        Command::Verify(c) => {
            let cfg = load(c)?;
            let report = run_suite(&cfg)?;
            let path = emit_report(&report, &cfg.output_dir, c.format)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for r in report.failures() {
                eprintln!("FAIL {} margin={:e} tol={:e} {}", r.name, r.margin, r.tolerance, r.error.as_deref().unwrap_or(""));
            }
            let failed = report.failures().count();
            println!("{} records, {} failed -> {}", report.records.len(), failed, path.display());
            return Ok(failed == 0);
        }
        Command::Kubo { common, n } => (common, kubo_table(&load(common)?, *n)?),
        Command::Taylor(c) => (c, taylor_table(&load(c)?)?),
        Command::Norms(c) => (c, norms_table(&load(c)?)?),
        Command::Transport(c) => (c, transport_table(&load(c)?)?),
    };
    let stem = match cli.command {
        Command::Kubo { .. } => "kubo",
        Command::Taylor(_) => "taylor",
        Command::Norms(_) => "norms",
        _ => "transport",
    };
    let cfg = load(common)?;
    let path = table.write(&cfg.output_dir, stem, common.format)?;
    println!("{} rows -> {}", table.rows.len(), path.display());
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
