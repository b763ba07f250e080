//! `nagkit`: reaction-corpus ingestion, node-aligned augmentation, graph
//! encoding, grammar-constrained beam decoding, token validation, class
//! statistics, evaluation, and attention benchmarks.

mod commands;
mod config;
mod io_util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::OrderKind;
use config::{
    resolve, FileConfig, DEFAULT_BEAM_SIZE, DEFAULT_COPIES, DEFAULT_LENGTH_PENALTY,
    DEFAULT_MAX_LEN, DEFAULT_SEED, DEFAULT_TEMPERATURE, DEFAULT_VOCAB_MAX_GAP,
};
use nagkit_attn::alloc_track::TrackingAllocator;
use nagkit_core::beam::DecodeConfig;
use nagkit_core::gentoken::HMode;
use nagkit_core::stepfeat::D_MAX;

// Installed so `attn-bench` reports measured peaks; negligible overhead for
// the other commands.
#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unreadable configuration: exit code 2.
    Usage(String),
    /// Bad data or failed processing: exit code 1.
    Data(String),
}

#[derive(Parser)]
#[command(name = "nagkit", version, about)]
struct Cli {
    /// TOML config file with default knobs; flags and NAGKIT_* env override.
    #[arg(long, global = true, env = "NAGKIT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest reaction lines and emit augmented training examples as JSONL.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar file receiving one line per rejected input.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long, env = "NAGKIT_COPIES")]
        copies: Option<usize>,
        #[arg(long, env = "NAGKIT_SEED")]
        seed: Option<u64>,
    },
    /// Featurize product SMILES lines into encoder-input JSON.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "identity")]
        order: OrderKind,
        #[arg(long, env = "NAGKIT_SEED")]
        seed: Option<u64>,
    },
    /// Grammar-constrained beam decoding over table-driven or uniform scorers.
    Decode {
        /// JSONL requests: {"product_smiles": "...", "scores_file": "..."?}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "NAGKIT_BEAM_SIZE")]
        beam_size: Option<usize>,
        #[arg(long, env = "NAGKIT_LENGTH_PENALTY", allow_hyphen_values = true)]
        length_penalty: Option<f64>,
        #[arg(long, env = "NAGKIT_TEMPERATURE")]
        temperature: Option<f64>,
        #[arg(long, env = "NAGKIT_MAX_LEN")]
        max_len: Option<usize>,
        /// Disable the grammar mask (debug regime; invalid sequences appear).
        #[arg(long)]
        no_mask: bool,
        /// Edge-gap bound of the built-in vocabulary for scorerless runs.
        #[arg(long, env = "NAGKIT_VOCAB_MAX_GAP")]
        vocab_max_gap: Option<usize>,
    },
    /// Derive aligned reactant orders for reaction lines.
    Align {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "random")]
        order: OrderKind,
        #[arg(long, env = "NAGKIT_SEED")]
        seed: Option<u64>,
    },
    /// Check token-stream lines; optionally dump per-step graph features.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_h_mode, env = "NAGKIT_H_MODE")]
        h_mode: Option<HMode>,
        /// JSONL feature-frame dump for valid sequences.
        #[arg(long)]
        features_out: Option<PathBuf>,
        #[arg(long, env = "NAGKIT_D_MAX")]
        d_max: Option<u16>,
    },
    /// Reaction-class distribution and split sizes.
    Stats {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-k accuracy, largest-fragment accuracy, and validity.
    Eval {
        /// JSONL: one JSON array of ranked SMILES per product.
        #[arg(long)]
        pred: PathBuf,
        /// Text: one truth SMILES per line.
        #[arg(long)]
        truth: PathBuf,
        /// Optional text file of class labels aligned with the truths.
        #[arg(long)]
        classes: Option<PathBuf>,
        /// Comma-separated ranks, e.g. 1,3,5,10.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 5, 10])]
        k: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Peak-memory and wall-time accounting of the attention kernels (CSV).
    AttnBench {
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
        n: Vec<usize>,
        #[arg(long = "d-h", value_delimiter = ',', default_values_t = [32usize])]
        d_h: Vec<usize>,
        #[arg(long = "d-h2", value_delimiter = ',', default_values_t = [4usize])]
        d_h2: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_h_mode(text: &str) -> Result<HMode, String> {
    match text {
        "explicit" => Ok(HMode::Explicit),
        "inferred" => Ok(HMode::Inferred),
        other => Err(format!("unknown h-mode `{other}` (explicit|inferred)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Augment {
            input,
            out,
            audit,
            copies,
            seed,
        } => commands::run_augment(
            &input,
            out.as_ref(),
            audit.as_ref(),
            resolve(copies, file.copies, DEFAULT_COPIES),
            resolve(seed, file.seed, DEFAULT_SEED),
        ),
        Command::Encode {
            input,
            out,
            order,
            seed,
        } => commands::run_encode(
            &input,
            out.as_ref(),
            order,
            resolve(seed, file.seed, DEFAULT_SEED),
        ),
        Command::Decode {
            input,
            out,
            beam_size,
            length_penalty,
            temperature,
            max_len,
            no_mask,
            vocab_max_gap,
        } => {
            let cfg = DecodeConfig {
                beam_size: resolve(beam_size, file.beam_size, DEFAULT_BEAM_SIZE),
                length_penalty: resolve(
                    length_penalty,
                    file.length_penalty,
                    DEFAULT_LENGTH_PENALTY,
                ),
                temperature: resolve(temperature, file.temperature, DEFAULT_TEMPERATURE),
                max_len: resolve(max_len, file.max_len, DEFAULT_MAX_LEN),
                mask_grammar: !no_mask,
            };
            commands::run_decode(
                &input,
                out.as_ref(),
                &cfg,
                resolve(vocab_max_gap, file.vocab_max_gap, DEFAULT_VOCAB_MAX_GAP),
            )
        }
        Command::Align {
            input,
            out,
            audit,
            order,
            seed,
        } => commands::run_align(
            &input,
            out.as_ref(),
            audit.as_ref(),
            order,
            resolve(seed, file.seed, DEFAULT_SEED),
        ),
        Command::Validate {
            input,
            h_mode,
            features_out,
            d_max,
        } => {
            let file_h_mode = match file.h_mode.as_deref() {
                Some(text) => Some(parse_h_mode(text).map_err(CliError::Usage)?),
                None => None,
            };
            commands::run_validate(
                &input,
                resolve(h_mode, file_h_mode, HMode::Explicit),
                features_out.as_ref(),
                resolve(d_max, file.d_max, D_MAX),
            )
        }
        Command::Stats { input, out } => commands::run_stats(&input, out.as_ref()),
        Command::Eval {
            pred,
            truth,
            classes,
            k,
            out,
        } => commands::run_eval(&pred, &truth, classes.as_ref(), &k, out.as_ref()),
        Command::AttnBench { n, d_h, d_h2, out } => {
            commands::run_attn_bench(&n, &d_h, &d_h2, out.as_ref())
        }
    }
}
