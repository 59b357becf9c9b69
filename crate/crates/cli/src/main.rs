//! `weakorder` command-line runner.

mod config;
mod error;
mod experiments;
mod output;
mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::ExperimentConfig;
use error::CliError;
use output::{ErrorRecord, Status, Summary};

#[derive(Parser)]
#[command(name = "weakorder", version, about = "Two-pointer weak-value experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write summary JSON and correlation CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print named operators, states and bundled example configs.
    ListPresets,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("WEAKORDER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::ConfigInvalid(format!("WEAKORDER_THREADS={raw:?} is not a positive integer")))?;
    // a second initialization can only happen in-process; ignore it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load(path: &Path) -> Result<(String, ExperimentConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    Ok((text, cfg))
}

fn run(config: &Path, out: &Path, seed_override: Option<u64>) -> Result<u8, CliError> {
    let (text, cfg) = load(config)?;
    configure_threads()?;
    let seed = seed_override.or(cfg.classical.as_ref().and_then(|c| c.seed)).unwrap_or(cfg.seed);
    let experiment = cfg.experiment.as_str();
    let mut summary = Summary {
        artifact: "weakorder",
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.to_string(),
        config_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        seed,
        status: Status::Pass,
        error: None,
        tolerances: cfg.tolerances,
        checks: Vec::new(),
        results: serde_json::Value::Null,
    };
    let (rows, code) = match experiments::run(&cfg, seed) {
        Ok(outcome) => {
            let pass = outcome.checks.iter().all(|c| c.pass);
            summary.status = if pass { Status::Pass } else { Status::Fail };
            summary.checks = outcome.checks;
            summary.results = outcome.results;
            (outcome.rows, if pass { 0 } else { 1 })
        }
        Err(CliError::Numerical(e)) => {
            summary.status = Status::NumericalFailure;
            summary.error = Some(ErrorRecord { name: e.name().to_string(), message: e.to_string() });
            (Vec::new(), 3)
        }
        Err(other) => return Err(other),
    };
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(&cfg.output.csv), output::csv(experiment, &rows))?;
    std::fs::write(out.join(&cfg.output.summary), summary.to_json())?;
    for c in summary.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {} ({:?} {})", c.name, c.value, c.relation, c.bound);
    }
    if let Some(e) = &summary.error {
        eprintln!("numerical failure: {}: {}", e.name, e.message);
    }
    Ok(code)
}

fn validate(config: &Path) -> Result<u8, CliError> {
    let (_, cfg) = load(config)?;
    experiments::preflight(&cfg).map_err(|e| match e {
        CliError::Numerical(e) => CliError::ConfigInvalid(format!("{}: {e}", e.name())),
        other => other,
    })?;
    println!("ok: {}", cfg.experiment.as_str());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => run(&config, &out, seed),
        Command::Validate { config } => validate(&config),
        Command::ListPresets => {
            print!("{}", presets::listing());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
