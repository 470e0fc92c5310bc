//! Command line front end: experiment runner plus braid scripting tool.
//! All logic lives in the library; this file only parses arguments,
//! applies flag overrides, and maps errors to exit codes.

use clap::{Args, Parser, Subcommand};
use gg::experiment::{
    braid_tool, configure_workers, load_config, run, BraidCommand, DEFAULT_CLI_ENTROPY_ITERS,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gg", version, about = "Braid-averaged invariants of sphere isotopies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run(RunArgs),
    /// Evaluate braid-word utilities on a `"strands; letters"` word.
    Braid {
        #[command(subcommand)]
        tool: BraidArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config.
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (default: all cores; GG_SINGLE_THREAD=1 forces 1).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum BraidArgs {
    /// Freely reduce a word.
    Reduce { word: String },
    /// Print the induced strand permutation in cycle notation.
    Permutation { word: String },
    /// Sum of letter signs.
    Expsum { word: String },
    /// Linking number of strands I and J in the closure.
    Linking { i: usize, j: usize, word: String },
    /// Entropy estimate from coordinate growth.
    Entropy {
        word: String,
        #[arg(long, default_value_t = DEFAULT_CLI_ENTROPY_ITERS)]
        iters: usize,
    },
    /// Signature of the closure.
    Signature { word: String },
    /// Homogenized value of a quasimorphism on the word.
    Homogenize {
        quasimorphism: String,
        word: String,
        /// Comma-separated power schedule.
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<u32>,
    },
}

impl From<BraidArgs> for BraidCommand {
    fn from(a: BraidArgs) -> BraidCommand {
        match a {
            BraidArgs::Reduce { word } => BraidCommand::Reduce { word },
            BraidArgs::Permutation { word } => BraidCommand::Permutation { word },
            BraidArgs::Expsum { word } => BraidCommand::ExpSum { word },
            BraidArgs::Linking { i, j, word } => BraidCommand::Linking { i, j, word },
            BraidArgs::Entropy { word, iters } => BraidCommand::Entropy { word, iters },
            BraidArgs::Signature { word } => BraidCommand::Signature { word },
            BraidArgs::Homogenize {
                quasimorphism,
                word,
                schedule,
            } => BraidCommand::Homogenize {
                quasimorphism,
                word,
                schedule,
            },
        }
    }
}

fn run_command(args: RunArgs) -> ExitCode {
    configure_workers(args.workers);
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    // Assertion failures inside the pipeline (purity, ordering) are
    // internal invariant violations, distinct from bad configs.
    let outcome = std::panic::catch_unwind(|| run(&config));
    match outcome {
        Ok(Ok(artifacts)) => {
            for file in &artifacts.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("{e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(4))
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("internal invariant violation");
            eprintln!("internal invariant violation: {message}");
            ExitCode::from(4)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::Braid { tool } => match braid_tool(&tool.into()) {
            Ok(line) => {
                println!("{line}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
    }
}
