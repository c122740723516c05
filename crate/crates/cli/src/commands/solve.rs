use std::path::Path;

use eib_core::solver::{self, InfoSummary};
use serde::Serialize;

use super::{beta_warning, OutputFile, RunOutput};
use crate::config::SolveConfig;
use crate::error::CliError;

#[derive(Serialize)]
struct SummaryFile {
    #[serde(flatten)]
    info: InfoSummary,
    converged: bool,
    iterations: usize,
    restart_index: usize,
}

pub fn run(cfg: &SolveConfig, base: &Path) -> Result<RunOutput, CliError> {
    let (joint, _) = cfg.source.load(base)?;
    let (state, trace, info) = solver::solve_eib(&joint, &cfg.solver)?;
    let summary = SummaryFile {
        info,
        converged: trace.converged,
        iterations: trace.iterations(),
        restart_index: trace.restart_index,
    };
    let report = format!(
        "H(T) = {:.6}  I(X;T) = {:.6}  I(Y;T) = {:.6}  L = {:.6}  ({} iterations, {})",
        info.h_t,
        info.i_xt,
        info.i_yt,
        info.l_eib,
        summary.iterations,
        if trace.converged { "converged" } else { "not converged" }
    );
    Ok(RunOutput {
        files: vec![
            OutputFile::json("state.json", &state)?,
            OutputFile::text("trace.csv", trace.to_csv()),
            OutputFile::json("summary.json", &summary)?,
        ],
        not_converged: usize::from(!trace.converged),
        warnings: beta_warning(cfg.solver.beta).into_iter().collect(),
        report,
    })
}
