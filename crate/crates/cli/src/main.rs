//! `causim`: runs the bundled experiments, classifies model descriptions and
//! writes `<command>.json` plus `<command>.csv` to the output directory.
//!
//! Exit codes: 0 on success, 1 for usage, config or input errors, 2 when a
//! law broke a state invariant.

mod args;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causim_core::experiments::ExperimentError;
use causim_core::{build_system_state, ExperimentConfig, WaveError};
use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::Output;

/// Bumped whenever a field of the JSON output changes meaning or goes away.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] causim_core::Error),
    #[error("cannot read {path}: {source}")]
    Input {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("output encoding failed: {0}")]
    Output(String),
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<WaveError> for CliError {
    fn from(e: WaveError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_invariant_failure() => 2,
            _ => 1,
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let cfg = ExperimentConfig::from_path(path).map_err(causim_core::Error::from)?;
    // A config that also describes a world must describe a valid one.
    if cfg.space.is_some() {
        build_system_state(&cfg).map_err(causim_core::Error::from)?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let config = config.as_ref();
    match &cli.command {
        Command::Bell(a) => commands::bell(a, config),
        Command::Doubleslit(a) => commands::doubleslit(a, config),
        Command::Wave(a) => commands::wave(a, config),
        Command::Pendulum(a) => commands::pendulum(a, config),
        Command::Analyze(a) => commands::analyze(a),
        Command::Lhv(a) => commands::lhv(a, config),
    }
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::write(&path, bytes).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn write_outputs(out: &Path, name: &str, output: &Output) -> Result<(PathBuf, PathBuf), CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.display().to_string(),
        source,
    })?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "params": output.params,
        "result": output.result,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    let json_path = write_file(out.join(format!("{name}.json")), text.as_bytes())?;
    let csv_path = write_file(out.join(format!("{name}.csv")), &output.csv)?;
    Ok((json_path, csv_path))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let name = cli.command.name();
    let result = execute(&cli).and_then(|output| {
        let paths = write_outputs(&cli.out, name, &output)?;
        Ok((output, paths))
    });
    match result {
        Ok((output, (json_path, csv_path))) => {
            print!("{}", output.summary);
            println!("wrote {} and {}", json_path.display(), csv_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("causim {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
