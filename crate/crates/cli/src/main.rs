//! `nsad`: evaluation, differentiation, cost audits, conversions, SAT encoding
//! and conservative-gradient enumeration from the command line.
//!
//! Results go to stdout as a single JSON document; diagnostics go to stderr.
//! Exit code 0 on success, 1 when valid input fails at run time (domain
//! errors, budgets, singular matrices), 2 on malformed input.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "nsad", version, about = "Nonsmooth automatic differentiation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arith {
    /// Binary64 floats.
    F64,
    /// Exact rationals (rejects log, exp and other irrational ops).
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fwd,
    Bwd,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate a program at a point.
    Eval {
        program: PathBuf,
        /// Comma-separated inputs; decimals or rationals such as `3/7`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, value_enum, default_value = "f64")]
        arith: Arith,
        /// JSON object mapping subprogram references to files.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Value, selected gradient and cost audit of a single-output program.
    Grad {
        program: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, value_enum, default_value = "bwd")]
        mode: Mode,
        /// Derivatives at kinks, e.g. `relu0=1/2,abs0=0`.
        #[arg(long, default_value = "")]
        policy: String,
        /// `unit` or `weighted:c_nonlin=<q>,c_relu=<q>`.
        #[arg(long, default_value = "unit")]
        scheme: String,
        #[arg(long, value_enum, default_value = "f64")]
        arith: Arith,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Cost report of a program, or `cost table` for the per-op constants.
    Cost {
        /// Program file, or the word `table`.
        target: String,
        #[arg(long, default_value = "unit")]
        scheme: String,
        /// Vector length for the norm rows of the weighted table.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Print an aligned text table instead of JSON.
        #[arg(long)]
        text: bool,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Encode a DIMACS 3-CNF as a ReLU network, or decide it by sign sweep.
    Sat {
        #[command(subcommand)]
        action: SatAction,
    },
    /// Decide whether the autodiff conservative gradient of a network is a singleton.
    Enum {
        network: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Seed of the randomized fallback.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Convert an `{add, sub, relu}` program to a network or a ternary network to a program.
    Convert { input: PathBuf },
    /// Directional-derivative construction with its three checks.
    Ddemo {
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
pub enum SatAction {
    /// Print the encoded network as JSON.
    Encode { cnf: PathBuf },
    /// Sweep sign vectors for a positive value.
    Check {
        cnf: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            // A closed pipe (e.g. `| head`) is not an error of the command.
            let _ = writeln!(std::io::stdout().lock(), "{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut diag = serde_json::json!({ "error": e.to_string() });
            if let Some(node) = e.node() {
                diag["node"] = node.into();
            }
            eprintln!("{diag}");
            ExitCode::from(if e.is_domain() { 1 } else { 2 })
        }
    }
}
