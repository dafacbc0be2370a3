//! Command-line front end for the `secrecy-region` library: configuration
//! parsing, command dispatch and output formatting.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{Outputs, Overrides};
pub use config::{Format, Loaded};
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Region,
    Lowsnr,
    Converge,
    DegradeCheck,
}

/// Runs `command` on raw config bytes.
pub fn execute(command: Command, config: &[u8], o: &Overrides) -> Result<Outputs, CliError> {
    let loaded = Loaded::from_bytes(config)?;
    match command {
        Command::Region => commands::region(&loaded, o),
        Command::Lowsnr => commands::lowsnr(&loaded, o),
        Command::Converge => commands::converge(&loaded, o),
        Command::DegradeCheck => commands::degrade_check(&loaded, o),
    }
}

/// Where the sidecar of `path` goes: `path` with `.meta.json` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Reads the config, runs the command and writes the outputs. Without an
/// output path the main artifact goes to stdout and the sidecar is dropped.
pub fn run(command: Command, config_path: &Path, output: Option<&Path>, o: &Overrides) -> Result<(), CliError> {
    let bytes = std::fs::read(config_path)
        .map_err(|source| CliError::Io { path: config_path.display().to_string(), source })?;
    let out = execute(command, &bytes, o)?;
    let configured = config::RunConfig::parse(&bytes)?.output.and_then(|s| s.path).map(PathBuf::from);
    match output.map(Path::to_path_buf).or(configured) {
        Some(path) => {
            write(&path, &out.main)?;
            if let Some(side) = &out.sidecar {
                write(&sidecar_path(&path), side)?;
            }
        }
        None => print!("{}", out.main),
    }
    Ok(())
}
