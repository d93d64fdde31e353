//! `rlab`: runs configured experiments and writes CSV artifacts plus a summary.

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::{Config, ConfigError, Experiment};
use crate::experiments::Run;
use crate::report::{write_summary, Verdict};

#[derive(Parser)]
#[command(name = "rlab", version, about = "Reflecting-diffusion experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for CSV files and summary.txt.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides sim.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// `key=value` overrides applied after the file.
        overrides: Vec<String>,
    },
    /// Print the available experiments.
    ListExperiments,
    /// Parse and check a config without running it.
    Validate { config: PathBuf, overrides: Vec<String> },
}

enum Failure {
    Usage(ConfigError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ConfigError>() {
            Ok(c) => Failure::Usage(c),
            Err(e) => Failure::Runtime(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e)
    }
}

fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<Config, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = Config::parse(&text)?;
    for o in overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = seed {
        cfg.set("sim.seed", s)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli, config: &Path, overrides: &[String]) -> Result<bool, Failure> {
    let cfg = load(config, overrides, cli.seed)?;
    let exp = cfg.validate()?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let start = Instant::now();
    let mut job = Run::new(&cfg, &cli.out)?;
    job.execute(exp)?;
    let runtime = start.elapsed().as_secs_f64();
    let header = [
        ("experiment", exp.name().to_string()),
        ("config_hash", cfg.hash()),
        ("seed", cfg.raw("sim.seed").unwrap_or("-").to_string()),
        ("dt", cfg.raw("sim.dt").unwrap_or("-").to_string()),
        ("n_paths", cfg.raw("sim.n_paths").unwrap_or("-").to_string()),
        ("runtime_s", format!("{runtime:.3}")),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
    ];
    write_summary(&cli.out.join("summary.txt"), &header, &job.checks)?;
    let mut failed = false;
    for c in &job.checks {
        if c.verdict != Verdict::Info {
            println!("{:<13} {} = {:.6}", c.verdict.to_string().to_uppercase(), c.name, c.value);
        }
        failed |= c.verdict == Verdict::Fail;
    }
    Ok(!failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.description());
            }
            Ok(true)
        }
        Command::Validate { config, overrides } => load(config, overrides, cli.seed).and_then(|cfg| {
            let exp = cfg.validate()?;
            println!("ok: {} (config {})", exp.name(), &cfg.hash()[..12]);
            Ok(true)
        }),
        Command::Run { config, overrides } => run(&cli, config, overrides),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
