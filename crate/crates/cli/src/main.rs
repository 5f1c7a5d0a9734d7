//! `binmarket`: critical transaction costs, consistent price systems and
//! arbitrage witnesses for binary market trees.
//!
//! Exit codes: 0 success, 2 domain violation, 3 no consistent price system
//! for the requested measure and cost, 64 usage or I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use binmarket::{Selection, SweepRange};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "binmarket", version, about = "Binary market models under proportional transaction costs")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Market configuration (JSON).
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for the random starts of the numeric search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Grid resolution m (step 1/m) for the seed scan; adaptive if omitted.
    #[arg(long, global = true)]
    pub grid: Option<u32>,

    /// Nelder-Mead iterations per start.
    #[arg(long, global = true, default_value_t = 2000)]
    pub budget: usize,

    /// Skip the closed form and the sandwich shortcut.
    #[arg(long, global = true)]
    pub numeric_only: bool,

    /// Slack tolerance for CPS construction and membership tests.
    #[arg(long, global = true, default_value_t = binmarket::cps::DEFAULT_DELTA_TOL)]
    pub tol: f64,

    /// Transaction cost in [0, 1).
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Cost range `start:stop:count`.
    #[arg(long, global = true)]
    pub sweep: Option<SweepRange>,

    /// Interval point chosen for the CPS at each node.
    #[arg(long, global = true, value_enum, default_value_t = SelectionArg::Midpoint)]
    pub selection: SelectionArg,

    /// Measure for `rho` and `cps`: `q0`, `one-step`, `argmax`, or a JSON
    /// file of per-level probabilities.
    #[arg(long, global = true, default_value = "argmax")]
    pub measure: String,

    /// Largest horizon handed to the arbitrage LP.
    #[arg(long, global = true, default_value_t = binmarket::arbitrage::DEFAULT_LP_CAP)]
    pub lp_cap: usize,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Check node constraints and list every violation.
    Validate,
    /// Compute the critical cost and print the JSON report.
    LambdaC,
    /// Arbitrage, membership and score gap over a cost range (CSV).
    Sweep,
    /// Dump the rho tables of a measure (CSV).
    Rho,
    /// Build and verify a consistent price system (CSV).
    Cps,
    /// Search for an arbitrage strategy and write the witness (CSV).
    Arbitrage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Midpoint,
    Left,
    Right,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::Midpoint => Selection::Midpoint,
            SelectionArg::Left => Selection::Left,
            SelectionArg::Right => Selection::Right,
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
    NoCps(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 2,
            Failure::NoCps(_) => 3,
            Failure::Usage(_) => 64,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) | Failure::NoCps(m) => m,
        }
    }
}

impl From<binmarket::Error> for Failure {
    fn from(e: binmarket::Error) -> Self {
        use binmarket::Error;
        match e {
            Error::NoCps { .. } => Failure::NoCps(e.to_string()),
            Error::Sweep(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
