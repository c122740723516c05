//! Experiment drivers. Each command turns a configuration into a set of named
//! output files held in memory; writing them is left to the caller.

use std::path::Path;

use serde::Serialize;

use crate::config::Command;
use crate::error::CliError;

pub mod bounds_sim;
pub mod decompose;
pub mod gauss;
pub mod rd_compare;
pub mod solve;
pub mod sweep;
pub mod toy_transfer;

#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn text(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), contents: contents.into_bytes() }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self, CliError> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        Ok(Self::text(name, s))
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.contents).unwrap_or("")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// Number of solves that hit `max_iter` before converging.
    pub not_converged: usize,
    pub warnings: Vec<String>,
    /// Short human-readable summary for the terminal.
    pub report: String,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// `base` is the directory relative file references are resolved against.
pub fn execute(cmd: &Command, base: &Path) -> Result<RunOutput, CliError> {
    match cmd {
        Command::Solve(c) => solve::run(c, base),
        Command::Sweep(c) => sweep::run(c, base),
        Command::BoundsSim(c) => bounds_sim::run(c),
        Command::ToyTransfer(c) => toy_transfer::run(c),
        Command::RdCompare(c) => rd_compare::run(c, base),
        Command::Gauss(c) => gauss::run(c),
        Command::Decompose(c) => decompose::run(c, base),
    }
}

pub(crate) fn beta_warning(beta: f64) -> Option<String> {
    (beta <= 1.0).then(|| format!("beta = {beta} is at most 1, where keeping label information never outweighs compression"))
}
