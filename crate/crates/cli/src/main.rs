//! `arn`: command-line front end for neuron programs.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arn", version, about = "Compile, train, evolve and compare recurrent neuron programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    C,
    Graph,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitName {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Cls,
    Reg,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a double pendulum dataset as CSV.
    GenPendulum {
        #[arg(long, default_value_t = 2000)]
        series: usize,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling interval in seconds.
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network built from one neuron program.
    Train {
        /// A `.arn` file or `zoo:NAME`.
        #[arg(long)]
        neuron: String,
        #[arg(long)]
        data: PathBuf,
        /// TOML training config; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Recurrent nodes (power of two).
        #[arg(long, default_value_t = 16)]
        nodes: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained model on one split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitName,
        /// Also write per-series predictions in original units.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Search for new neurons starting from a seed program.
    Evolve {
        #[arg(long)]
        data: PathBuf,
        /// TOML stage plan; defaults to the first screening stage only.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        generations: usize,
        #[arg(long, default_value_t = 256)]
        population: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "zoo:lstm")]
        neuron: String,
        /// TOML training config used as the base of every stage.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        workers: Option<usize>,
        /// Front snapshot to resume from.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Print the compiled form of a neuron.
    Compile {
        #[arg(long)]
        neuron: String,
        #[arg(long, value_enum, default_value = "c")]
        emit: Emit,
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        inputs: usize,
    },
    /// Bundled neuron programs.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Compare two prediction files on shared targets.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Dataset CSV holding the targets.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Random search over the optimiser hyperparameters.
    Search {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 512)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "zoo:lstm")]
        neuron: String,
        #[arg(long, default_value_t = 16)]
        nodes: usize,
        /// Training examples per sampled config (a reduced budget).
        #[arg(long, default_value_t = 20_000)]
        examples: usize,
        /// TOML base config for the fields that are not searched.
        #[arg(long)]
        config: Option<PathBuf>,
        /// TOML search space; defaults apply to missing keys.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    /// Print the bundled neuron names.
    List,
    /// Print the source of one bundled neuron.
    Show { name: String },
}

/// Failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
