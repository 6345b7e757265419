//! `symtok` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod files;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(path: &Path, message: impl Display) -> Self {
        CliError::Data {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Data { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "symtok",
    version,
    about = "Symbolic music tokenization toolkit"
)]
struct Cli {
    /// Worker threads for per-file work.
    #[arg(long, global = true, env = "SYMTOK_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Preprocess and tokenize every MIDI file of a directory.
    Tokenize(commands::TokenizeArgs),
    /// Turn token files back into MIDI files.
    Detokenize(commands::DetokenizeArgs),
    /// Learn a merge table from token files.
    BpeLearn(commands::BpeLearnArgs),
    /// Encode token files with a merge table.
    BpeApply(commands::BpeArgs),
    /// Decode BPE token files back to base tokens.
    BpeUndo(commands::BpeArgs),
    /// Tokens per beat, vocabulary coverage, merge statistics and timing.
    Stats(commands::StatsArgs),
    /// Tokenization syntax error report per file and in aggregate.
    Tse(commands::TseArgs),
    /// Isotropy, intrinsic dimension and singular spectrum of an EMB1 matrix.
    EmbedGeometry(commands::GeometryArgs),
    /// Keep files that parse, carry the required time signature and have
    /// enough tracks.
    Filter(commands::FilterArgs),
    /// Exact maximum-weight matching over a TSV edge list.
    Dedup(commands::DedupArgs),
    /// Seeded train/valid/test split of a list of ids.
    Split(commands::SplitArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Tokenize(a) => commands::tokenize(a),
        Command::Detokenize(a) => commands::detokenize(a),
        Command::BpeLearn(a) => commands::bpe_learn(a),
        Command::BpeApply(a) => commands::bpe_apply(a, true),
        Command::BpeUndo(a) => commands::bpe_apply(a, false),
        Command::Stats(a) => commands::stats(a),
        Command::Tse(a) => commands::tse(a),
        Command::EmbedGeometry(a) => commands::embed_geometry(a),
        Command::Filter(a) => commands::filter(a),
        Command::Dedup(a) => commands::dedup(a),
        Command::Split(a) => commands::split(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
