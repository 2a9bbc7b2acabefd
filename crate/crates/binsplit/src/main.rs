//! Command-line front end. All logic lives in the library; this binary
//! parses flags, resolves the config, calls one `perform_*` function, and
//! renders the result to stdout and, with `--out`, an artifact directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 guard violation,
//! 4 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binsplit::config::{Resolved, load_config, resolve};
use binsplit::harness::TraceMode;
use binsplit::policy::PolicyKind;
use binsplit::report::{
    BetaOutcome, diagnose_summary_toml, finals_csv, perform_diagnose, perform_rate, perform_run,
    perform_sweep, rate_csv, rate_summary_toml, run_summary_toml, sweep_csv, sweep_summary_toml,
    trace_csv, write_artifact,
};
use binsplit::{Error, Result};

#[derive(Parser)]
#[command(name = "binsplit", version, about = "Bin-splitting bandit policies for noisy black-box minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and summarize its regret.
    Run(CommonArgs),
    /// Sweep fixed-grid bin lengths and compare against the adaptive policy.
    Sweep(CommonArgs),
    /// Fit the empirical convergence rate over a horizon ladder.
    Rate(CommonArgs),
    /// Probe the objective's regularity constants and check the guards.
    Diagnose(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML configuration.
    #[arg(long)]
    config: PathBuf,

    /// Directory to write the artifact into (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Shorthand for --set experiment.master_seed=<int>.
    #[arg(long)]
    seed: Option<i64>,

    /// Override one config field, e.g. --set policy.mu=9.0 (repeatable).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    set: Vec<String>,

    /// Worker threads for replication fan-out (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                Error::Guard { .. } => ExitCode::from(3),
                _ => ExitCode::from(4),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Rate(args) => cmd_rate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

/// Loads, overrides, and resolves the configuration; applies --threads.
fn prepare(args: &CommonArgs) -> Result<Resolved> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::config("--threads", "thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::internal(format!("thread pool: {e}")))?;
    }
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("experiment.master_seed={seed}"));
    }
    let file = load_config(&args.config, &overrides)?;
    resolve(&file)
}

fn cmd_run(args: CommonArgs) -> Result<()> {
    let resolved = prepare(&args)?;
    let cfg = &resolved.experiment;
    let (summary, traces) = perform_run(&resolved)?;
    println!(
        "run: horizon {} replications {} mean_final_regret {} stderr {} mean_average_regret {}",
        cfg.horizon, cfg.replications, summary.mean_final_regret, summary.stderr_final_regret,
        summary.mean_average_regret
    );
    if let Some(out) = &args.out {
        let mut files = vec![
            ("summary.toml", run_summary_toml(&summary, cfg.horizon, cfg.replications)),
            ("finals.csv", finals_csv(&summary, cfg.horizon)),
        ];
        if cfg.trace == TraceMode::Full {
            files.push(("trace.csv", trace_csv(&traces, cfg.space.dim())));
        }
        write_artifact(out, &resolved, &files)?;
        println!("artifact written to {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(args: CommonArgs) -> Result<()> {
    let resolved = prepare(&args)?;
    let table = perform_sweep(&resolved)?;
    let initial = adaptive_initial(&resolved)?;
    let csv_text = sweep_csv(&table, initial);
    print!("{csv_text}");
    if let Some(out) = &args.out {
        let files = vec![
            ("summary.toml", sweep_summary_toml(&table, initial)),
            ("sweep.csv", csv_text),
        ];
        write_artifact(out, &resolved, &files)?;
        eprintln!("artifact written to {}", out.display());
    }
    Ok(())
}

fn adaptive_initial(resolved: &Resolved) -> Result<f64> {
    match resolved.experiment.policy.kind {
        PolicyKind::Adaptive { a0, .. } => Ok(a0),
        PolicyKind::Simple { .. } => Err(Error::config("policy.kind", "sweeps compare against the adaptive policy")),
    }
}

fn cmd_rate(args: CommonArgs) -> Result<()> {
    let resolved = prepare(&args)?;
    let report = perform_rate(&resolved)?;
    let csv_text = rate_csv(&report);
    print!("{csv_text}");
    println!(
        "fitted_slope {} predicted_slope {} rms_residual {}",
        report.fit.slope, -report.prediction.exponent, report.fit.rms_residual
    );
    if let Some((lo, hi)) = report.band {
        let verdict = if report.band_pass == Some(true) { "pass" } else { "fail" };
        println!("band [{lo}, {hi}]: {verdict}");
    }
    if let Some(out) = &args.out {
        let files = vec![("summary.toml", rate_summary_toml(&report)), ("rate.csv", csv_text)];
        write_artifact(out, &resolved, &files)?;
        eprintln!("artifact written to {}", out.display());
    }
    Ok(())
}

fn cmd_diagnose(args: CommonArgs) -> Result<()> {
    let resolved = prepare(&args)?;
    let report = perform_diagnose(&resolved)?;
    println!(
        "smoothness constant estimate {} (alpha {}, winning scale {})",
        report.smoothness.constant, report.alpha, report.smoothness.scale
    );
    match &report.beta {
        BetaOutcome::Estimate { beta, guard_limit, guard_pass } => {
            let verdict = if *guard_pass { "pass" } else { "violation" };
            println!("packing growth estimate {beta} (bound d/alpha = {guard_limit}: {verdict})");
        }
        BetaOutcome::Insufficient { message } => {
            println!("packing growth estimate unavailable: {message}");
        }
    }
    println!("resolution bonus threshold {}", report.mu_threshold);
    if let (Some(mu), Some(ok)) = (report.mu_configured, report.mu_sufficient) {
        let verdict = if ok { "sufficient" } else { "below the sufficient threshold" };
        println!("configured mu {mu} is {verdict}");
    }
    if let Some(out) = &args.out {
        let files = vec![("summary.toml", diagnose_summary_toml(&report))];
        write_artifact(out, &resolved, &files)?;
        eprintln!("artifact written to {}", out.display());
    }
    Ok(())
}
