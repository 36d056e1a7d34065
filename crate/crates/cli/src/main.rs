//! `nhssh`: run quench scenarios for the embedded non-Hermitian SSH chain.
//!
//! Exit status is 0 on success, 2 when the configuration is rejected and 3
//! when the simulation or file output fails. `NHSSH_THREADS` caps the worker
//! pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhssh_core::experiment::{
    parse_config, run_scenario, ConfigError, ScenarioConfig, ScenarioKind,
};

const THREADS_VAR: &str = "NHSSH_THREADS";

#[derive(Parser)]
#[command(
    name = "nhssh",
    version,
    about = "Quench experiments on a non-Hermitian SSH chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its files.
    Run {
        #[arg(long)]
        scenario: ScenarioKind,
        /// `key = value` configuration file; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extra `key=value` overrides applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Parse and validate a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Run(String, i32),
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig, Failure> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Config(format!("reading {}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn apply_sets(cfg: &mut ScenarioConfig, sets: &[String]) -> Result<(), ConfigError> {
    for s in sets {
        let Some((key, value)) = s.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin: "--set".into(),
                text: s.clone(),
            });
        };
        cfg.set(key.trim(), value.trim(), "--set")?;
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Config(format!(
            "{THREADS_VAR} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Run(format!("thread pool: {e}"), 3))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(Some(&config))?;
            println!(
                "{}: ok (scenario {}, {} sites)",
                config.display(),
                cfg.scenario,
                cfg.lattice().dim()
            );
            Ok(())
        }
        Command::Run {
            scenario,
            config,
            out,
            sets,
        } => {
            let mut cfg = load(config.as_ref())?;
            cfg.scenario = scenario;
            apply_sets(&mut cfg, &sets).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            configure_threads()?;
            let output =
                run_scenario(&cfg).map_err(|e| Failure::Run(e.to_string(), e.exit_code()))?;
            for file in &output.files {
                println!("{}", file.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
