//! `dialamr`: command-line front end for the dialogue AMR toolkit.
//!
//! Exit status is 0 on success, 1 when the data has problems (error
//! findings, dangling references, unrepairable lines) and 2 on I/O, parse or
//! usage failures.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dialamr", version, about = "Dialogue AMR corpus toolkit")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Role inventory file overriding the bundled one.
    #[arg(long, env = "DIALAMR_INVENTORY", global = true)]
    inventory: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    /// Tab-separated lines with fixed fields.
    Records,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate corpus files.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Treat warnings such as unknown roles as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Smatch between a predicted and a gold corpus.
    Score(ScoreArgs),
    /// Corpus statistics.
    Stats { file: PathBuf },
    /// Reduce dialogue graphs to standard AMR.
    Strip {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
        /// Write the removal report here instead of standard error.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Resolve cross-utterance reference nodes.
    Link {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Merge utterances into one multi-sentence graph.
    Merge {
        file: PathBuf,
        /// Utterance ids to merge, in order; all entries by default.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
    /// One spaced, renamed graph per line.
    Linearize {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Canonical variable renaming.
    Rename {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Repair one model output per line.
    Repair {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
        /// Write per-line status records here instead of standard error.
        #[arg(long)]
        status: Option<PathBuf>,
    },
    /// Seeded train/dev/test split.
    Split {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Directory receiving train.amr, dev.amr and test.amr.
        #[arg(long)]
        out_dir: PathBuf,
        /// Train, dev and test fractions.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Run an external model on linearized input and repair its output.
    Predict {
        file: PathBuf,
        /// Program reading one input per line and writing one graph per line.
        #[arg(long)]
        model: String,
        /// Arguments passed to the model program.
        #[arg(last = true)]
        model_args: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pair entries by utterance id instead of by position.
    #[arg(long)]
    pub by_id: bool,
    /// Leave the TOP triple out.
    #[arg(long)]
    pub no_top: bool,
    /// Compare `:X-of` edges as written.
    #[arg(long)]
    pub no_normalize_inverse: bool,
    #[command(flatten)]
    pub out: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("dialamr: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context { format: cli.format, inventory: cli.inventory };
    let result = match cli.command {
        Command::Check { files, strict } => commands::check(&ctx, &files, strict),
        Command::Score(args) => commands::score(&ctx, &args),
        Command::Stats { file } => commands::stats(&ctx, &file),
        Command::Strip { file, out, report } => commands::strip(&ctx, &file, &out, report.as_deref()),
        Command::Link { file, out } => commands::link(&ctx, &file, &out),
        Command::Merge { file, ids, out } => commands::merge(&file, &ids, &out),
        Command::Linearize { file, out } => commands::linearize(&file, &out),
        Command::Rename { file, out } => commands::rename(&file, &out),
        Command::Repair { file, out, status } => commands::repair(&ctx, &file, &out, status.as_deref()),
        Command::Split { file, seed, out_dir, fractions } => commands::split(&ctx, &file, seed, &out_dir, fractions),
        Command::Predict { file, model, model_args, out } => commands::predict(&file, model, model_args, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dialamr: {e}");
            ExitCode::from(2)
        }
    }
}
