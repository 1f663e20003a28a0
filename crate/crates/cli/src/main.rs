//! Command-line front end: each subcommand loads one JSON config, applies the
//! flag overrides, runs the matching experiment, and prints a short report.
//! Exit codes: 0 success, 1 validation or configuration error, 2 numerical
//! instability (boundary overflow, non-finite state, stalled flow).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csslab::config::RunConfig;
use csslab::experiments::{self, RunSummary};

#[derive(Parser)]
#[command(name = "csslab", version, about = "Wave-guide laboratory for the planar \
Chern-Simons-Schrodinger system and its effective 1D cubic-quintic equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the planar system from the configured initial state.
    Run2d(RunArgs),
    /// Evolve the reduced 1D system.
    Run1d(RunArgs),
    /// Evolve both systems side by side and track the projected difference
    /// across the confinement sweep.
    Reduce(RunArgs),
    /// Compute a ground state by imaginary-time flow and save it with mu.
    Groundstate(RunArgs),
    /// Run the invariant suite and print a pass/fail table.
    Selfcheck(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Run2d(a)
            | Command::Run1d(a)
            | Command::Reduce(a)
            | Command::Groundstate(a)
            | Command::Selfcheck(a) => a,
        }
    }
}

fn report(summary: &RunSummary, out: &std::path::Path) {
    if let (Some(mass), Some(energy)) = (summary.mass_drift, summary.energy_drift) {
        println!("{}: mass drift {mass:.3e}, energy drift {energy:.3e}", summary.command);
    }
    if let Some(mu) = summary.mu {
        println!("{}: mu = {mu:.12}", summary.command);
    }
    if let Some(e) = summary.final_energy {
        println!("{}: final energy {e:.12}", summary.command);
    }
    for leg in &summary.legs {
        println!(
            "eps = {:<8} sup error {:.6e}  final error {:.6e}  mass drift {:.3e}",
            leg.eps, leg.sup_error, leg.final_error, leg.mass_drift
        );
    }
    for check in &summary.checks {
        println!(
            "{}  {:<36} value {:.3e}  bound {:.3e}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.bound
        );
    }
    println!("{}: done in {:.2}s, outputs in {}", summary.command, summary.runtime_s, out.display());
}

fn run(cli: &Cli) -> csslab::error::Result<bool> {
    let args = cli.command.args();
    let cfg = RunConfig::load(&args.config)?.with_overrides(args.out.clone(), args.seed);
    let summary = match &cli.command {
        Command::Run2d(_) => experiments::run2d(&cfg)?,
        Command::Run1d(_) => experiments::run1d(&cfg)?,
        Command::Reduce(_) => experiments::reduce(&cfg)?,
        Command::Groundstate(_) => experiments::groundstate(&cfg)?,
        Command::Selfcheck(_) => experiments::selfcheck(&cfg)?,
    };
    report(&summary, &cfg.output_dir);
    Ok(summary.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
