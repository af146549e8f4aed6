//! Command-line surface: state construction, metrics, phase-space scans,
//! locus/figure datasets, and the randomized oracle cross-check, all driven
//! by config documents with flag overrides.
//!
//! Exit codes are a stable contract: 0 success, 2 validation error,
//! 3 truncation flag, 4 solver or numerical failure.

mod args;
mod commands;

use clap::{Parser, Subcommand};
use std::io::Write as _;
use subplanck::error::Result;

#[derive(Parser, Debug)]
#[command(name = "subplanck", version, about = "Sub-Planck state metrology toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build one state and print its metric report.
    State(commands::StateArgs),
    /// Wigner function on a phase-space grid (CSV).
    Wigner(commands::WignerArgs),
    /// Displaced-overlap scan: grid CSV, single point, or first zero on a ray.
    Overlap(commands::OverlapArgs),
    /// Central fringe area per photon-addition count.
    Cfa(commands::CfaArgs),
    /// Displacement QFI, from a Fock build or the moment series.
    Qfi(commands::QfiArgs),
    /// Squared overlap of two pure states at a common cutoff.
    Fidelity(commands::FidelityArgs),
    /// Solve the equal-QFI locus for a state pair and sweep fidelities.
    Locus(commands::LocusArgs),
    /// Reproduce a figure dataset (fig1..fig4) with its manifest.
    Figure(commands::FigureArgs),
    /// Randomized cross-check of the moment series against Fock builds.
    #[command(name = "verify-oracle")]
    VerifyOracle(commands::VerifyArgs),
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::State(a) => commands::cmd_state(a),
        Cmd::Wigner(a) => commands::cmd_wigner(a),
        Cmd::Overlap(a) => commands::cmd_overlap(a),
        Cmd::Cfa(a) => commands::cmd_cfa(a),
        Cmd::Qfi(a) => commands::cmd_qfi(a),
        Cmd::Fidelity(a) => commands::cmd_fidelity(a),
        Cmd::Locus(a) => commands::cmd_locus(a),
        Cmd::Figure(a) => commands::cmd_figure(a),
        Cmd::VerifyOracle(a) => commands::cmd_verify_oracle(a),
    }
}

fn main() {
    if let Ok(s) = std::env::var("SUBPLANCK_THREADS") {
        match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Ignore a second initialization (tests call main-like paths).
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid SUBPLANCK_THREADS={s:?}"),
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
