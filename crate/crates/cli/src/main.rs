//! `tokcol`: generate instances, run the protocols, sweep parameter grids,
//! verify traces and replay the ring-pair indistinguishability argument.

mod exit;
mod gen;
mod impossibility;
mod run;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use exit::Failure;

const EXIT_CODES: &str = "\
Exit codes:
  0   success (verdict matches the oracle, all checks pass)
  1   verdict differs from the oracle, or trace equivalence fails
  2   usage error or invalid parameters
  3   run hit the round limit
  4   a message exceeded the bandwidth B
  5   run ended without a verdict (knowledge none)
  6   verification found invariant violations
  7   I/O or parse error
  70  internal error";

#[derive(Parser, Debug)]
#[command(name = "tokcol", version, about = "Token collision detection on anonymous CONGEST networks", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a topology with a token assignment.
    Gen(GenArgs),
    /// Run one protocol on an instance file.
    Run(RunArgs),
    /// Run a parameter grid described by a TOML config.
    Sweep(SweepArgs),
    /// Run the seeded corpus with full traces and check every invariant.
    Verify(VerifyArgs),
    /// Compare traces of the ring pair C_n / C_2n without knowledge of n or k.
    Impossibility(ImpossibilityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Ring,
    Path,
    Random,
    Dumbbell,
    Impossibility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Distinct,
    Duplicates,
    MinFar,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    DetSmall,
    DetLarge,
    Rand,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KnowArg {
    N,
    K,
    None,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Node count (per half for dumbbell).
    #[arg(long)]
    pub n: usize,
    /// Token count; defaults to n.
    #[arg(long)]
    pub k: Option<usize>,
    /// Token length in bits.
    #[arg(long = "L", default_value_t = 8)]
    pub len: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Distinct)]
    pub mode: Mode,
    /// Duplicated pairs for `--mode duplicates`.
    #[arg(long, default_value_t = 1)]
    pub duplicates: usize,
    /// Extra-edge probability for `--kind random`.
    #[arg(long, default_value_t = 0.2)]
    pub edge_prob: f64,
    /// Bridge nodes for `--kind dumbbell`.
    #[arg(long, default_value_t = 0)]
    pub bridge: usize,
    /// Output file; a directory for `--kind impossibility`. Stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Instance file as written by `gen`.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoArg::DetSmall)]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value_t = KnowArg::N)]
    pub know: KnowArg,
    /// Write the full trace (JSON lines) to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pack several tokens per message (det-small only).
    #[arg(long)]
    pub pack: bool,
    /// Bits per message (det-small) or per piece (det-large, rand).
    #[arg(long)]
    pub bandwidth: Option<u32>,
    #[arg(long)]
    pub round_limit: Option<u64>,
    /// Identifier length multiplier for rand.
    #[arg(long, default_value_t = 4)]
    pub c: u32,
    /// Hash range exponent offset for rand.
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    /// Append the metrics record (one JSON line) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Results CSV; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = tokcol::corpus::DEFAULT_SIZE)]
    pub corpus_size: usize,
    #[arg(long, default_value_t = tokcol::corpus::DEFAULT_SEED)]
    pub seed: u64,
    /// Also run the fault-injection self-test.
    #[arg(long)]
    pub faults: bool,
    /// Check a recorded trace instead of the corpus (needs --instance).
    #[arg(long, requires = "instance")]
    pub trace: Option<PathBuf>,
    /// Instance the trace was recorded on (needs --trace).
    #[arg(long, requires = "trace")]
    pub instance: Option<PathBuf>,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImpossibilityArgs {
    /// Ring sizes to check; defaults to 3 4 5 6.
    #[arg(long, num_args = 1..)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = AlgoArg::DetSmall)]
    pub algo: AlgoArg,
    /// Directory for the traces of both rings.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen::cmd_gen(&a),
        Command::Run(a) => run::cmd_run(&a),
        Command::Sweep(a) => sweep::cmd_sweep(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Impossibility(a) => impossibility::cmd_impossibility(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let Failure { code, message } = f;
            if !message.is_empty() {
                eprintln!("tokcol: {message}");
            }
            ExitCode::from(code)
        }
    }
}
