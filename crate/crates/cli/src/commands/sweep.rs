use std::path::Path;

use eib_core::fmt::float;
use eib_core::solver::{self, InfoSummary};
use eib_core::{prob, rng};
use rayon::prelude::*;

use super::{beta_warning, OutputFile, RunOutput};
use crate::config::{Axis, SweepConfig};
use crate::error::CliError;
use crate::svg::{self, Series};

#[derive(Clone, Copy, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub info: InfoSummary,
    pub converged: bool,
}

pub fn run(cfg: &SweepConfig, base: &Path) -> Result<RunOutput, CliError> {
    let (joint, _) = cfg.source.load(base)?;
    let grid = cfg.grid.unwrap_or_else(|| cfg.axis.default_grid());
    let values = grid.values();
    let points: Vec<Result<SweepPoint, CliError>> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut c = cfg.solver.clone();
            match cfg.axis {
                Axis::Alpha => c.alpha = value,
                Axis::Beta => c.beta = value,
            }
            c.seed = rng::derive_seed(cfg.solver.seed, &[i as u64]);
            let (_, trace, info) = solver::solve_eib(&joint, &c)?;
            Ok(SweepPoint { value, info, converged: trace.converged })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>, _>>()?;

    let axis = cfg.axis.name();
    let mut csv = format!("{axis},h_t,h_t_given_x,i_xt,i_yt,f_eib,converged\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            float(p.value),
            float(p.info.h_t),
            float(p.info.h_t_given_x),
            float(p.info.i_xt),
            float(p.info.i_yt),
            float(p.info.f_eib),
            p.converged
        ));
    }
    let chart = svg::line_chart(
        &format!("Information quantities along {axis}"),
        axis,
        "nats",
        &[
            Series::new("I(Y;T)", points.iter().map(|p| (p.value, p.info.i_yt)).collect()),
            Series::new("H(T|X)", points.iter().map(|p| (p.value, p.info.h_t_given_x)).collect()),
        ],
    );

    let h_y = prob::entropy(&joint.marginal_y())?;
    let not_converged = points.iter().filter(|p| !p.converged).count();
    let mut warnings: Vec<String> = Vec::new();
    let low_beta = match cfg.axis {
        Axis::Beta => values.iter().copied().find(|&b| b <= 1.0),
        Axis::Alpha => Some(cfg.solver.beta).filter(|&b| b <= 1.0),
    };
    warnings.extend(low_beta.and_then(beta_warning));
    let max_iyt = points.iter().map(|p| p.info.i_yt).fold(0.0, f64::max);
    let report = format!(
        "{} points over {axis} in [{}, {}]; max I(Y;T) = {:.6} (H(Y) = {:.6}); {} not converged",
        points.len(),
        grid.start,
        grid.stop,
        max_iyt,
        h_y,
        not_converged
    );
    Ok(RunOutput {
        files: vec![OutputFile::text("sweep.csv", csv), OutputFile::text("sweep.svg", chart)],
        not_converged,
        warnings,
        report,
    })
}
