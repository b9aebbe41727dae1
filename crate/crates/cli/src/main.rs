use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod filter;

#[derive(Debug, Parser)]
#[command(name = "siac", version, about = "Sparse event-based audio codec")]
pub struct Cli {
    /// More progress output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a WAV file into an event stream.
    Encode {
        input: PathBuf,
        /// `.siac`, or `.json` for the JSON mirror.
        output: PathBuf,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        bank: BankArgs,
    },
    /// Render an event stream to a 16-bit WAV file.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
        /// Render even if the encoding was made with a different bank.
        #[arg(long)]
        allow_bank_mismatch: bool,
    },
    /// Print the header, events and step norms of an event stream.
    Inspect {
        input: PathBuf,
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        json: bool,
    },
    /// Keep the events matching every given condition.
    Filter {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        predicate: filter::Predicate,
    },
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Maximum events per segment.
    #[arg(long, default_value_t = 32)]
    steps: usize,
    /// Stop once the residual falls to this fraction of the segment's initial norm.
    #[arg(long, default_value_t = 0.0)]
    stop_threshold: f64,
    /// Noise seed for dictionary bursts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Size of the log-spaced f0 grid.
    #[arg(long)]
    f0_count: Option<usize>,
    /// Coordinate refinement rounds per event.
    #[arg(long)]
    refine_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BankArgs {
    /// Directory of impulse response WAV files; the built-in synthetic bank otherwise.
    #[arg(long, env = "SIAC_BANK_DIR")]
    bank: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("siac: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
