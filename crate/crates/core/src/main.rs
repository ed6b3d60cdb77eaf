// Copyright 2026 The cvmbqc Authors
// SPDX-License-Identifier: Apache-2.0

//! `cvmbqc` command line: compile, simulate, verify and sweep measurement
//! programs.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 verification
//! failure, 3 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "cvmbqc", version, about = "Cluster-state compiler and Gaussian simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a symplectic target into a measurement program.
    Compile {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// κ₁ (QND coupling) or θ₀ (teleport coupling) for every gate.
        #[arg(long, allow_negative_numbers = true)]
        free_param: Option<f64>,
        #[arg(long, value_enum, default_value_t = CouplingArg::Qnd)]
        coupling: CouplingArg,
        /// Where to write the synthesis report; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a program at finite squeezing.
    Simulate {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        db: f64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Pinned)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        /// Input state file; vacuum when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the simulated map with the embedded target.
    Verify {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value_t = 130.0)]
        db: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Synthesis report to update with the measured error and excess.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tabulate map error and excess noise over squeezing levels.
    Sweep {
        #[arg(long)]
        program: PathBuf,
        /// Comma-separated squeezing levels in dB.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
        db: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CouplingArg {
    Qnd,
    Teleport,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Pinned,
    Sampled,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Compile { target, out, free_param, coupling, report } => {
            let coupling = match coupling {
                CouplingArg::Qnd => cvmbqc::multimode::CouplingKind::Qnd,
                CouplingArg::Teleport => cvmbqc::multimode::CouplingKind::Teleport,
            };
            commands::compile(&target, &out, free_param, coupling, report.as_deref())
        }
        Command::Simulate { program, db, policy, seed, shots, input, out } => commands::simulate(
            &program,
            db,
            matches!(policy, PolicyArg::Sampled).then_some(seed),
            shots,
            input.as_deref(),
            out.as_deref(),
        ),
        Command::Verify { program, db, tol, report } => commands::verify(&program, db, tol, report.as_deref()),
        Command::Sweep { program, db, out } => commands::sweep(&program, &db, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
