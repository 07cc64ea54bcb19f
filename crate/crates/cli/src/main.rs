#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpme_cli::commands::{cmd_assemble, cmd_plot, cmd_solve, cmd_verify};
use fpme_cli::plot::PlotKind;
use fpme_cli::{CliError, CliResult, RunConfig};

/// Fractional porous medium laboratory.
#[derive(Parser)]
#[command(name = "fpme", version)]
struct Cli {
    /// Directory for every file written; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the operator and export it with its principal eigenpair.
    Assemble {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evolve the initial datum and write the trajectory.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run verification suites and write the report.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Suite id such as S9, a comma separated list, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Render CSV output as SVG.
    Plot {
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Snapshot rows to draw for profiles, e.g. `0,10,20`.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<usize>>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn load(path: Option<&PathBuf>, output_dir: Option<PathBuf>) -> CliResult<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FPME_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("FPME_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Assemble { config } => print_paths(&cmd_assemble(&load(config.as_ref(), cli.output_dir)?)?),
        Command::Solve { config } => print_paths(&cmd_solve(&load(config.as_ref(), cli.output_dir)?)?),
        Command::Verify { config, suite } => {
            let cfg = load(config.as_ref(), cli.output_dir)?;
            let report = cmd_verify(&cfg, &suite)?;
            println!("{} suites passed", report.suites.len());
        }
        Command::Plot { kind, snapshots, inputs } => {
            let out = match cli.output_dir {
                Some(dir) => dir,
                None => inputs[0].parent().map_or_else(|| PathBuf::from("."), PathBuf::from),
            };
            print_paths(&cmd_plot(kind, &inputs, &out, snapshots.as_deref())?);
        }
        Command::DefaultConfig => {
            println!("{}", serde_json::to_string_pretty(&RunConfig::default()).expect("config serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
