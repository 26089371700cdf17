use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oda_lab::error::{LabError, LabResult};
use oda_lab::experiment::cmd_experiment;
use oda_lab::generate::{generate, GenerateKind, Params};
use oda_lab::run::{cmd_run, env_seed, resolve_seed};

/// Online double auction simulator.
#[derive(Debug, Parser)]
#[command(name = "oda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario's mechanism once and write the result as JSON, with
    /// a per-trader CSV next to it.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed and ODA_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the tasks of an experiment config; exits 4 if any task fails.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a scenario, plus its trader table as CSV: random-patient, rising-market, theorem1 or fig1.
    Generate {
        #[arg(long)]
        kind: GenerateKind,
        /// `key=value` pairs, comma separated or repeated.
        #[arg(long, num_args = 0..)]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> LabResult<ExitCode> {
    match command {
        Command::Run { scenario, out, seed } => {
            let r = cmd_run(&scenario, &out, seed)?;
            println!(
                "{}: {} pairs, welfare {}, deficit {}",
                r.mechanism,
                r.outcome.pairs.len(),
                r.outcome.welfare,
                r.outcome.deficit
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out } => {
            let report = cmd_experiment(&config, &out, |t| println!("{}", t.line()))?;
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                let failed = report.tasks.iter().filter(|t| !t.passed).count();
                Err(LabError::Acceptance(format!("{failed} of {} tasks failed", report.tasks.len())))
            }
        }
        Command::Generate { kind, params, out } => {
            let seed = resolve_seed(None, None, env_seed().as_deref())?;
            let s = generate(kind, Params::parse(&params)?, seed)?;
            std::fs::write(&out, s.to_toml())?;
            s.write_csv(&out.with_extension("csv"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
