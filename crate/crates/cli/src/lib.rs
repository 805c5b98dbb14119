//! `gpq`: seeded experiment runner.
//!
//! Every subcommand emits one table. CSV is canonical; `--format json`
//! writes the same rows as one JSON object per line. A fixed seed gives
//! byte-identical output regardless of thread count.

mod commands;
mod output;
mod params;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::*;
pub use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gpq_core::Error),
    #[error(transparent)]
    Glued(#[from] gpq_glued::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "gpq",
    version,
    about = "Query-complexity experiments on hypergraph properties and glued trees"
)]
pub struct Cli {
    /// Root seed; trials draw from independent streams derived from it.
    #[arg(long, global = true, env = "GPQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive permutation-invariance check of graph properties.
    Invariance(InvarianceArgs),
    /// Exact D_r constraint probabilities and their polynomial fit in 1/r.
    DrPoly(DrPolyArgs),
    /// Distance between circuit outputs under D_r and D_∞.
    Closeness(ClosenessArgs),
    /// Success rate of the randomized decision tree on edge parity.
    Dequantize(DequantizeArgs),
    /// Build a glued-trees instance.
    GluedBuild(GluedBuildArgs),
    /// Two-stage quantum algorithm for the degree-5 problem.
    SolveQuantum(SolveQuantumArgs),
    /// Classical baselines for the degree-5 problem.
    SolveClassical(SolveClassicalArgs),
    /// Quantum vs classical query counts across k.
    Scaling(ScalingArgs),
    /// Lower-bound games and reduction adapters.
    GameSim(GameSimArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Slot,
    Full,
}

impl From<ModeArg> for gpq_glued::OracleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Slot => gpq_glued::OracleMode::Slot,
            ModeArg::Full => gpq_glued::OracleMode::Full,
        }
    }
}

/// Parses `args` (including the program name) and writes the table to
/// `--out` or to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let bytes = execute(&cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        }),
        None => Ok(stdout.write_all(&bytes)?),
    }
}

/// Runs the parsed command and returns the rendered output.
pub fn execute(cli: &Cli) -> Result<Vec<u8>> {
    let (seed, fmt) = (cli.seed, cli.format);
    match &cli.command {
        Command::Invariance(a) => output::render(&commands::invariance(a, seed)?, fmt),
        Command::DrPoly(a) => output::render(&commands::dr_poly(a, seed)?, fmt),
        Command::Closeness(a) => output::render(&commands::closeness(a, seed)?, fmt),
        Command::Dequantize(a) => output::render(&commands::dequantize(a, seed)?, fmt),
        Command::GluedBuild(a) => commands::glued_build(a, seed, fmt),
        Command::SolveQuantum(a) => output::render(&commands::solve_quantum(a, seed)?, fmt),
        Command::SolveClassical(a) => output::render(&commands::solve_classical(a, seed)?, fmt),
        Command::Scaling(a) => output::render(&commands::scaling(a, seed)?, fmt),
        Command::GameSim(a) if a.summary => output::render(&commands::game_summary(a, seed)?, fmt),
        Command::GameSim(a) => output::render(&commands::game_sim(a, seed)?, fmt),
    }
}
