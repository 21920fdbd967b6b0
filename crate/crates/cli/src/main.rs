//! `tsot` — build, split, validate, and evaluate joint ASR+ST token streams.

mod commands;
mod jsonl;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "tsot", version, about = "Joint ASR+ST t-SOT corpus pipeline")]
struct Cli {
    /// Emit reports as machine-readable JSON instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add a joint `tsot` stream to every corpus record
    Serialize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// inter0.0, inter1.0, inter0.5, gamma:<float>, or align
        #[arg(long)]
        strategy: String,
        /// Skip records that fail instead of aborting
        #[arg(long)]
        skip_bad: bool,
    },
    /// Split `tsot` streams back into per-task text
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Check that every `tsot` stream reproduces its record's src and tgt
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score hypothesis delay logs against a reference corpus
    Eval {
        /// Reference corpus JSONL
        #[arg(long)]
        input: PathBuf,
        /// Hypothesis delay-log JSONL (id, duration_ms, tokens, delays_ms)
        #[arg(long)]
        delays: PathBuf,
        /// Also write the JSON report here
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate chunked streaming emission and compare strategy latency
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Delay-log output path; with several strategies the strategy name
        /// is inserted before the extension
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated strategy list
        #[arg(long, default_value = "inter0.0,inter1.0,inter0.5,align")]
        strategies: String,
        #[arg(long, default_value_t = 1000)]
        chunk_ms: u64,
    },
    /// Corpus shape summary
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
    /// Generate a deterministic synthetic corpus
    GenSynthetic {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// monotone, crossing, many-to-one, or sparse
        #[arg(long, default_value = "monotone")]
        topology: String,
        #[arg(long, default_value_t = 1)]
        min_words: usize,
        #[arg(long, default_value_t = 12)]
        max_words: usize,
        #[arg(long, default_value_t = 1000)]
        ms_per_word: u64,
        #[arg(long, default_value = "und")]
        src_lang: String,
        #[arg(long, default_value = "und")]
        tgt_lang: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let result = match cli.command {
        Command::Serialize {
            input,
            output,
            strategy,
            skip_bad,
        } => commands::serialize(&input, &output, &strategy, skip_bad, json),
        Command::Split { input, output } => commands::split(&input, &output, json),
        Command::Validate { input } => commands::validate(&input, json),
        Command::Eval {
            input,
            delays,
            output,
        } => commands::eval(&input, &delays, output.as_deref(), json),
        Command::Simulate {
            input,
            output,
            strategies,
            chunk_ms,
        } => commands::simulate(&input, &output, &strategies, chunk_ms, json),
        Command::Stats { input } => commands::stats(&input, json),
        Command::GenSynthetic {
            output,
            seed,
            count,
            topology,
            min_words,
            max_words,
            ms_per_word,
            src_lang,
            tgt_lang,
        } => commands::gen_synthetic(commands::GenArgs {
            output,
            seed,
            count,
            topology,
            min_words,
            max_words,
            ms_per_word,
            src_lang,
            tgt_lang,
        }),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
