//! Single command-line entry point wiring the benchmark pipeline:
//! generate -> collect -> train -> evaluate -> benchmark -> report.
//!
//! Data output goes to stdout as CSV; human-readable progress goes to
//! stderr. Exit codes: 0 success, 1 usage error, 2 i/o error, 3 numeric
//! failure, 4 generation infeasibility.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Deterministic benchmark for domain shift in learned collision avoidance",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores [default: 0]
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one world and write its JSON description
    Gen {
        #[command(flatten)]
        common: Common,
        /// Environment kind: canyon | forest | sandbox | corridor
        #[arg(long)]
        env: String,
        /// Output world file
        #[arg(long)]
        out: PathBuf,
        /// Fly the corridor in the reverse direction
        #[arg(long)]
        reverse: bool,
    },
    /// Collect expert demonstration flights into a dataset tree
    Collect {
        #[command(flatten)]
        common: Common,
        /// Flights per environment kind [default: 100]
        #[arg(long)]
        flights: Option<usize>,
        /// Comma-separated kinds [default: canyon,forest,sandbox]
        #[arg(long)]
        kinds: Option<String>,
        /// Output dataset directory [default: $DRIFTBENCH_DATA/dataset]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Almost-collision set operations
    #[command(subcommand)]
    Acd(AcdCommand),
    /// Train a policy by behavioral cloning
    Train {
        #[command(flatten)]
        common: Common,
        /// Architecture: naux | auxd
        #[arg(long)]
        arch: String,
        /// Dataset directory [default: $DRIFTBENCH_DATA/dataset]
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output model file (DSHC format)
        #[arg(long)]
        out: PathBuf,
        /// Training epochs [default: 20]
        #[arg(long)]
        epochs: Option<usize>,
        /// Learning rate [default: 1e-4]
        #[arg(long)]
        lr: Option<f64>,
        /// Minibatch size [default: 32]
        #[arg(long)]
        batch: Option<usize>,
        /// Sample stride over demonstration steps [default: 6]
        #[arg(long)]
        stride: Option<usize>,
        /// Auxiliary depth loss weight [default: 0.1]
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Evaluate a model online; per-run and average distances as CSV
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model file
        #[arg(long)]
        model: PathBuf,
        /// Environment kind: canyon | forest | sandbox | corridor
        #[arg(long)]
        env: String,
        /// Runs to average [default: 10]
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Train and evaluate policy populations, then emit reports
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated architectures [default: naux,auxd]
        #[arg(long)]
        arch: Option<String>,
        /// Policies per architecture [default: 10]
        #[arg(long)]
        population: Option<usize>,
        /// Demonstration flights per kind for the shared dataset [default: 5]
        #[arg(long)]
        flights: Option<usize>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-plot the percentile curve from an emitted population.csv
    Plot {
        #[command(flatten)]
        common: Common,
        /// Directory containing population.csv (a bench output)
        #[arg(long = "in")]
        input: PathBuf,
        /// Output SVG file
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AcdCommand {
    /// Generate the synthetic almost-collision set
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory [default: $DRIFTBENCH_DATA/acd]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of trajectories [default: 25]
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Classify an almost-collision set with a model; tables as CSV
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model file
        #[arg(long)]
        model: PathBuf,
        /// Almost-collision set directory [default: $DRIFTBENCH_DATA/acd]
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print on stdout with success; real usage
            // errors report on stderr with exit code 1.
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };

    let result = match cli.command {
        Command::Gen {
            common,
            env,
            out,
            reverse,
        } => commands::gen::run(&common, &env, &out, reverse),
        Command::Collect {
            common,
            flights,
            kinds,
            out,
        } => commands::collect::run(&common, flights, kinds.as_deref(), out),
        Command::Acd(AcdCommand::Gen {
            common,
            out,
            trajectories,
        }) => commands::acd::run_gen(&common, out, trajectories),
        Command::Acd(AcdCommand::Eval {
            common,
            model,
            data,
        }) => commands::acd::run_eval(&common, &model, data),
        Command::Train {
            common,
            arch,
            data,
            out,
            epochs,
            lr,
            batch,
            stride,
            beta,
        } => commands::train::run(
            &common,
            &arch,
            data,
            &out,
            commands::train::Overrides {
                epochs,
                lr,
                batch,
                stride,
                beta,
            },
        ),
        Command::Eval {
            common,
            model,
            env,
            runs,
        } => commands::eval::run(&common, &model, &env, runs),
        Command::Bench {
            common,
            arch,
            population,
            flights,
            out,
        } => commands::bench::run(&common, arch.as_deref(), population, flights, &out),
        Command::Plot { common, input, out } => commands::plot::run(&common, &input, &out),
    };

    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code(&err));
        }
    }
}

/// Map error kinds onto the documented exit codes.
fn exit_code(err: &anyhow::Error) -> i32 {
    use driftbench_core::Error as CoreError;
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Generation(_) => 4,
                CoreError::Numeric(_) => 3,
                CoreError::Io(_) | CoreError::Format(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}
