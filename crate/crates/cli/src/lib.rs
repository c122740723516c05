//! Experiment harness around `eib-core`: JSON-configured commands that write
//! CSV, JSON and SVG outputs together with a checksummed run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod svg;

pub use commands::{OutputFile, RunOutput};
pub use config::Command;
pub use error::{CliError, EXIT_NOT_CONVERGED};
pub use manifest::RunManifest;

/// Everything a single invocation needs.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: String,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub overrides: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Completed {
    pub output: RunOutput,
    pub manifest: RunManifest,
}

pub fn load_config(path: &Path, command: &str, overrides: &[String]) -> Result<Command, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    config::parse(&text, Some(command), overrides)
}

/// Runs the command and writes its outputs followed by `manifest.json`.
pub fn run(inv: &Invocation) -> Result<Completed, CliError> {
    if !config::COMMAND_NAMES.contains(&inv.command.as_str()) {
        return Err(CliError::Input(format!("unknown command `{}`", inv.command)));
    }
    let cmd = load_config(&inv.config_path, &inv.command, &inv.overrides)?;
    let base = inv.config_path.parent().unwrap_or(Path::new("."));
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let output = commands::execute(&cmd, base)?;
    let duration_secs = clock.elapsed().as_secs_f64();

    fs::create_dir_all(&inv.out_dir).map_err(|e| CliError::io(format!("creating {}", inv.out_dir.display()), e))?;
    let mut outputs = Vec::new();
    for f in &output.files {
        let path = inv.out_dir.join(&f.name);
        fs::write(&path, &f.contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        outputs.push(manifest::OutputEntry::describe(&f.name, &f.contents));
    }
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        library_version: eib_core::VERSION.to_string(),
        harness_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(&cmd)?,
        threads: rayon::current_num_threads(),
        started_unix_secs: started,
        duration_secs,
        not_converged: output.not_converged,
        outputs,
    };
    let path = inv.out_dir.join(manifest::MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(Completed { output, manifest })
}
