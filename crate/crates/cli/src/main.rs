//! patdist: exact distribution of regular-expression pattern counts in
//! random sequences generated by homogeneous order-m Markov models.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod pipeline;
mod report;

use pipeline::{run_automaton, run_dist, run_fit, run_oracle};

#[derive(Parser)]
#[command(
    name = "patdist",
    version,
    about = "Exact distribution of regular-expression pattern counts in Markov-generated random sequences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the distribution of the occurrence count
    Dist(Box<DistArgs>),
    /// Build the pattern automaton and export it as a DOT graph
    Automaton(AutomatonArgs),
    /// Fit a Markov model from a sequence file
    Fit(FitArgs),
    /// Ground truth for testing: exhaustive enumeration or Monte Carlo
    Oracle(Box<OracleArgs>),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Human,
    Csv,
    Kv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MuArg {
    /// Point mass on the observed first m letters
    Point,
    /// Stationary distribution of the context chain (extended precision,
    /// flagged inexact)
    Stationary,
}

#[derive(Args, Clone)]
pub struct ModelSource {
    /// Fit an order-M model from this sequence file (requires --order)
    #[arg(long, value_name = "FILE", group = "model-source")]
    pub fit: Option<PathBuf>,
    /// Model order for --fit
    #[arg(long, value_name = "M")]
    pub order: Option<usize>,
    /// Load a model file
    #[arg(long, value_name = "FILE", group = "model-source")]
    pub model: Option<PathBuf>,
    /// Uniform iid model over the alphabet
    #[arg(long, group = "model-source")]
    pub uniform: bool,
    /// Skip characters outside the alphabet instead of rejecting them
    #[arg(long)]
    pub skip_unknown: bool,
    /// Initial distribution for fitted models
    #[arg(long, value_enum, default_value = "point")]
    pub mu: MuArg,
}

#[derive(Args)]
pub struct DistArgs {
    /// Pattern expression (literals, (..|..), {k}, {k,l}, *, named classes)
    #[arg(long)]
    pub pattern: String,
    /// Ordered alphabet, e.g. ACGT
    #[arg(long)]
    pub alphabet: String,
    /// Named classes, e.g. "N=(A|C|G|T)" or "N=ACGT,R=AG"
    #[arg(long, default_value = "")]
    pub classes: String,
    #[command(flatten)]
    pub model: ModelSource,
    /// Sequence length
    #[arg(long, value_name = "L")]
    pub length: usize,
    /// Single count of interest (shorthand for --n-min N --n-max N)
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_name = "N")]
    pub n_min: Option<usize>,
    #[arg(long, value_name = "N")]
    pub n_max: Option<usize>,
    /// Solving strategy (auto, full, partial, lifting, fiduccia)
    #[arg(long, default_value = "auto")]
    pub method: String,
    /// Arithmetic for the solving phase
    #[arg(long, value_enum, default_value = "float")]
    pub mode: ModeArg,
    /// Mantissa bits for extended-precision floats
    #[arg(long, default_value_t = 1024)]
    pub precision_bits: u32,
    /// Relative-error target of the partial recursion
    #[arg(long, default_value_t = 1e-15)]
    pub eta: f64,
    /// Persisted fraction: loaded when present, written after reconstruction
    #[arg(long, value_name = "FILE")]
    pub fraction_cache: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    pub format: FormatArg,
    /// Also print probabilities at full precision
    #[arg(long)]
    pub full_precision: bool,
    #[arg(long, default_value_t = 0x5EED_CAFE)]
    pub seed: u64,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Memory budget in bytes for series storage
    #[arg(long, default_value_t = 8 << 30)]
    pub memory_budget: u64,
}

#[derive(Args)]
pub struct AutomatonArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub alphabet: String,
    #[arg(long, default_value = "")]
    pub classes: String,
    /// Augment to a non-m-ambiguous automaton of this order
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    /// Output DOT file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Sequence file (FASTA headers are skipped)
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub alphabet: String,
    #[arg(long, value_name = "M")]
    pub order: usize,
    /// Output model file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub skip_unknown: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Exhaustive,
    MonteCarlo,
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub alphabet: String,
    #[arg(long, default_value = "")]
    pub classes: String,
    #[command(flatten)]
    pub model: ModelSource,
    #[arg(long, value_name = "L")]
    pub length: usize,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub kind: OracleKind,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Exhaustive enumeration budget (number of sequences)
    #[arg(long, default_value_t = 10_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0x5EED_CAFE)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Dist(args) => run_dist(&args),
        Cmd::Automaton(args) => run_automaton(&args),
        Cmd::Fit(args) => run_fit(&args),
        Cmd::Oracle(args) => run_oracle(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
