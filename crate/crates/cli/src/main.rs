use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;
mod sweep;

#[derive(Parser, Debug)]
#[command(name = "gfqconv", version, about = "Non-binary RSC codes over GF(q) with q-QAM: spectra, search, decoding, simulation")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Worker threads (0 = all cores). Never changes integer results.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,

    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A code given either as a JSON descriptor or as a field size plus coefficients.
#[derive(Args, Debug, Clone, Serialize)]
pub struct CodeArgs {
    /// Code descriptor JSON: {"field": {"m": .., "poly": ..}, "a1": .., "a2": .., "a3": ..}
    #[arg(long, conflicts_with_all = ["q", "a1", "a2", "a3"])]
    pub code: Option<PathBuf>,
    /// Field size (4, 16 or 64 use the built-in primitive polynomials).
    #[arg(long)]
    pub q: Option<u32>,
    /// Primitive polynomial overriding the built-in one, as an integer bitmask.
    #[arg(long, requires = "q")]
    pub poly: Option<u32>,
    /// Feedback coefficient (nonzero).
    #[arg(long, requires = "q")]
    pub a1: Option<u32>,
    /// Parity coefficient on the next state (nonzero).
    #[arg(long, requires = "q")]
    pub a2: Option<u32>,
    /// Parity coefficient on the current state.
    #[arg(long, requires = "q")]
    pub a3: Option<u32>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FieldArgs {
    /// Field size: 4, 16 or 64 (built-in polynomial).
    #[arg(long, conflicts_with = "m")]
    pub q: Option<u32>,
    /// Extension degree, for fields without a built-in polynomial.
    #[arg(long, requires = "poly")]
    pub m: Option<u32>,
    /// Primitive polynomial as an integer bitmask; required with --m.
    #[arg(long)]
    pub poly: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Log and antilog tables of a field.
    FieldInfo(FieldArgs),
    /// Gray-labelled QAM points of a field's constellation.
    Constellation(ConstellationArgs),
    /// Encode a symbol sequence, optionally passing it through AWGN.
    Encode(EncodeArgs),
    /// Max-Log-MAP decode QAM observations.
    Decode(DecodeArgs),
    /// First two terms of a code's distance spectrum.
    Spectrum(SpectrumArgs),
    /// Rank every valid coefficient triple of a field.
    Search(SearchArgs),
    /// Monte Carlo SER/BER/FER sweep over AWGN.
    Simulate(SimulateArgs),
    /// CM and BICM capacity curves.
    Capacity(CapacityArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConstellationArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Emit every point (the only mode; kept for script compatibility).
    #[arg(long)]
    pub dump: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Input symbols: CSV with a `symbol` column, or one integer per line.
    #[arg(long = "in", conflicts_with = "random")]
    pub input: Option<PathBuf>,
    /// Encode this many uniformly random symbols instead of reading a file.
    #[arg(long)]
    pub random: Option<usize>,
    /// Append the tail symbol that returns the encoder to state 0.
    #[arg(long)]
    pub terminate: bool,
    /// Emit noisy QAM observations at this Es/N0 (dB) in the `decode` input format.
    #[arg(long, allow_hyphen_values = true)]
    pub channel_snr_db: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminationArg {
    Open,
    Zero,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Observations CSV: stage, sys_I, sys_Q, par_I, par_Q.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Es/N0 of the observations in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: f64,
    /// Trellis end condition.
    #[arg(long, value_enum, default_value_t = TerminationArg::Open)]
    pub termination: TerminationArg,
    /// Subtract the per-stage maximum in the recursions.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    Unordered,
    Ordered,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, value_enum, default_value_t = ConventionArg::Unordered)]
    pub convention: ConventionArg,
    /// Also report the smallest distance of unconverged length-3 prefixes.
    #[arg(long)]
    pub truncation: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Auto,
    Exhaustive,
    TwoPhase,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SearchArgs {
    /// Field size: 4, 16 or 64.
    #[arg(long)]
    pub q: u32,
    /// Primitive polynomial overriding the built-in one.
    #[arg(long)]
    pub poly: Option<u32>,
    /// Number of ranked rows to emit (0 = all computed).
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    /// Exhaustive scans every triple; two-phase shortlists the max-d1 triples first.
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModArg {
    Qam,
    Bpsk,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Modulation: q-QAM, or BPSK over the bit labels.
    #[arg(long = "mod", value_enum, default_value_t = ModArg::Qam)]
    pub modulation: ModArg,
    /// Eb/N0 sweep in dB: `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub ebn0: String,
    /// Frame cap per point; accepts `1e6`.
    #[arg(long, default_value = "1e6")]
    pub frames_max: String,
    /// Frame errors that end a point early.
    #[arg(long, default_value_t = 100)]
    pub ferr_min: u64,
    /// Information symbols per frame, tail excluded.
    #[arg(long, default_value_t = 100)]
    pub frame_len: usize,
    /// Terminate every frame in state 0.
    #[arg(long)]
    pub terminate: bool,
    /// Frames decoded between stop-rule checks.
    #[arg(long, default_value_t = 64)]
    pub batch: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CapacityArgs {
    /// Field size: 4, 16 or 64.
    #[arg(long)]
    pub q: u32,
    /// Primitive polynomial overriding the built-in one.
    #[arg(long)]
    pub poly: Option<u32>,
    /// Es/N0 grid in dB: `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true, default_value = "-5:0.25:25")]
    pub snr: String,
    /// Monte Carlo samples per point; accepts `1e6`.
    #[arg(long, default_value = "1e6")]
    pub samples: String,
    /// Also report the CM-to-BICM SNR gap at these rates (bits per channel use).
    #[arg(long, value_delimiter = ',')]
    pub gap_at: Vec<f64>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global()?;
    }
    let g = &cli.global;
    match cli.command {
        Command::FieldInfo(a) => commands::field_info(g, &a),
        Command::Constellation(a) => commands::constellation(g, &a),
        Command::Encode(a) => commands::encode(g, &a),
        Command::Decode(a) => commands::decode(g, &a),
        Command::Spectrum(a) => commands::spectrum(g, &a),
        Command::Search(a) => commands::search(g, &a),
        Command::Simulate(a) => commands::simulate(g, &a),
        Command::Capacity(a) => commands::capacity(g, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
