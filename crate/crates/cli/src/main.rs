mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use output::Format;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_SUITE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rcmlab", version, about = "Monte Carlo experiments on random connection models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed and RCMLAB_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; defaults to the config `output` or the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// List every problem with a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Suite(Vec<String>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { config, seed, workers, out, format } => run(&config, seed, workers, out, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("runtime error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Suite(failed)) => {
            eprintln!("consistency checks failed: {}", failed.join(", "));
            ExitCode::from(EXIT_SUITE)
        }
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    let config = config::load(path).map_err(Failure::Config)?;
    let problems = config.diagnostics();
    for p in &problems {
        println!("{p}");
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Config(anyhow::anyhow!("{} violation(s)", problems.len())))
    }
}

fn resolve_seed(flag: Option<u64>, config: &ExperimentConfig) -> anyhow::Result<u64> {
    if let Some(s) = flag.or(config.seed) {
        return Ok(s);
    }
    match std::env::var("RCMLAB_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("RCMLAB_SEED={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => bail!("RCMLAB_SEED: {e}"),
    }
}

fn run(path: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>, format: Format) -> Result<(), Failure> {
    let config = config::load(path).map_err(Failure::Config)?;
    let problems = config.diagnostics();
    if !problems.is_empty() {
        return Err(Failure::Config(anyhow::anyhow!(problems.join("; "))));
    }
    let seed = resolve_seed(seed, &config).map_err(Failure::Config)?;
    let workers = workers.or(config.workers).unwrap_or(0);

    let started = Instant::now();
    let outcome = rcmlab_core::parallel::with_workers(workers, || experiments::run(&config, seed))
        .map_err(|e| Failure::Runtime(e.into()))?
        .map_err(Failure::Runtime)?;
    eprintln!("{:?} finished in {:.2}s", config.kind, started.elapsed().as_secs_f64());

    let dir = out.or_else(|| config.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let target = dir.join(format!("{stem}.{}", format.extension()));
    let text = output::render(format, &config, seed, &outcome.records, outcome.report.as_ref()).map_err(Failure::Runtime)?;
    output::write_atomic(&target, &text).map_err(Failure::Runtime)?;
    println!("{}", target.display());

    if outcome.failed_checks.is_empty() {
        Ok(())
    } else {
        Err(Failure::Suite(outcome.failed_checks))
    }
}
