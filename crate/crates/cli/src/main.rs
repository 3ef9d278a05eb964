//! Batch front end: guessing-probability curves, single bounds, SOS checks,
//! strategies, no-signalling bounds, the secret-sharing attack and the
//! n-party table.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 solver failure.

mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::GridSpec;

#[derive(Parser, Debug)]
#[command(name = "dirk", version, about = "Device-independent randomness bounds for the Mermin scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep a Bell value and tabulate NPA, closed-form, strategy and
    /// no-signalling bounds.
    Curve(CurveArgs),
    /// NPA bound at one set of pinned values.
    Bound(BoundArgs),
    /// Check the sum-of-squares identities.
    VerifySos(VerifySosArgs),
    /// Build a strategy and report its Bell values.
    Strategy(StrategyArgs),
    /// No-signalling LP bound at one set of pinned values.
    NsBound(NsBoundArgs),
    /// Local models for the GHZ conditionals and the steering extension.
    AttackDemo(AttackArgs),
    /// Conjectured n-party bound against the strategy family.
    Nparty(NpartyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads for grid points.
    #[arg(long, env = "DIRK_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// a1, a1b1, a1b1c1, a2b2c2 or chsh_a1.
    #[arg(long)]
    pub scenario: String,
    /// Swept expression: mermin, mermin_prime, svetlichny or chsh.
    #[arg(long)]
    pub pin: String,
    /// Extra pins held fixed along the sweep, as `name=value`.
    #[arg(long = "fix")]
    pub fixed: Vec<String>,
    /// start:stop:step, or start:stop:count with --count.
    #[arg(long)]
    pub grid: GridSpec,
    #[arg(long)]
    pub count: bool,
    /// NPA level; defaults to the level used for the scenario.
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long, default_value_t = dirk::conic::SDP_TOLERANCE)]
    pub tolerance: f64,
    /// Skip the no-signalling column.
    #[arg(long)]
    pub no_ns: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub scenario: String,
    /// Pins as `name=value`, repeatable.
    #[arg(long = "pin")]
    pub pins: Vec<String>,
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long, default_value_t = dirk::conic::SDP_TOLERANCE)]
    pub tolerance: f64,
    /// Write the relaxation as JSON to this file.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Local,
    #[value(name = "two_party", alias = "two-party")]
    TwoParty,
}

#[derive(Args, Debug)]
pub struct VerifySosArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Radians.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Radians.
    #[arg(long)]
    pub phi: Option<f64>,
    /// start:stop:count over theta.
    #[arg(long)]
    pub grid_theta: Option<GridSpec>,
    /// start:stop:count over phi.
    #[arg(long)]
    pub grid_phi: Option<GridSpec>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// start:stop:count over lambda/mu with mu = 1 before normalisation.
    #[arg(long)]
    pub grid_ratio: Option<GridSpec>,
    /// Also check the exact points in Q(sqrt 2).
    #[arg(long)]
    pub exact: bool,
    /// Add this amount to the target's constant term.
    #[arg(long)]
    pub corrupt: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Ghz,
    #[value(name = "local_tangent", alias = "local-tangent")]
    LocalTangent,
    Violator,
    #[value(name = "two_party", alias = "two-party")]
    TwoParty,
    Nparty,
    Deterministic,
}

#[derive(Args, Debug)]
pub struct StrategyArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Include the full probability table.
    #[arg(long)]
    pub behavior: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NsBoundArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long = "pin")]
    pub pins: Vec<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Fail unless the Alice-Bob marginal is certified local.
    #[arg(long)]
    pub check_marginal: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NpartyArgs {
    #[arg(long)]
    pub n: usize,
    /// start:stop:step over M_n, or start:stop:count with --count; defaults
    /// to ten points from L_n to Q_n.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long)]
    pub count: bool,
    /// Adds an NPA column at this level (four parties only).
    #[arg(long)]
    pub npa_level: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Verification(String),
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<dirk::Error> for Failure {
    fn from(e: dirk::Error) -> Self {
        match e {
            dirk::Error::Solver(_) | dirk::Error::Infeasible(_) => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(a) => commands::curve(a),
        Command::Bound(a) => commands::bound(a),
        Command::VerifySos(a) => commands::verify_sos(a),
        Command::Strategy(a) => commands::strategy(a),
        Command::NsBound(a) => commands::ns_bound(a),
        Command::AttackDemo(a) => commands::attack_demo(a),
        Command::Nparty(a) => commands::nparty(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verification(m) => eprintln!("verification failed: {m}"),
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Solver(m) => eprintln!("solver failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
