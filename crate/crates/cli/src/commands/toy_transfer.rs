use eib_core::fmt::float;
use eib_core::rng;
use eib_core::solver::{self, EibConfig};
use eib_core::toy::{self, ToyConfig};
use eib_core::JointDistribution;
use rayon::prelude::*;

use super::{beta_warning, OutputFile, RunOutput};
use crate::config::{default_toy_beta, ToyTransferConfig};
use crate::error::CliError;
use crate::svg::{self, Series};

/// Accuracy table: `accuracy[a][r]` for `alphas[a]` and `source_rs[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferTable {
    pub alphas: Vec<f64>,
    pub source_rs: Vec<f64>,
    pub betas: Vec<f64>,
    pub accuracy: Vec<Vec<f64>>,
    pub converged: Vec<Vec<bool>>,
}

impl TransferTable {
    /// Best α per source noise level; the smallest α wins ties.
    pub fn best(&self) -> Vec<(f64, f64)> {
        (0..self.source_rs.len())
            .map(|r| {
                let mut best = (self.alphas[0], self.accuracy[0][r]);
                for (a, &alpha) in self.alphas.iter().enumerate().skip(1) {
                    if self.accuracy[a][r] > best.1 {
                        best = (alpha, self.accuracy[a][r]);
                    }
                }
                best
            })
            .collect()
    }
}

struct Source {
    joint: JointDistribution,
    alphabet: Vec<u64>,
}

pub fn table(cfg: &ToyTransferConfig) -> Result<TransferTable, CliError> {
    let betas = cfg.betas.clone().unwrap_or_else(|| cfg.source_rs.iter().map(|&r| default_toy_beta(r)).collect());
    let target = toy::generate(&ToyConfig {
        r: cfg.target_r,
        m: cfg.m,
        seed: rng::derive_seed(cfg.seed, &[1]),
        n_bits: cfg.n_bits,
    })?;
    let sources: Vec<Source> = cfg
        .source_rs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let data =
                toy::generate(&ToyConfig { r, m: cfg.m, seed: rng::derive_seed(cfg.seed, &[0, i as u64]), n_bits: cfg.n_bits })?;
            let (joint, alphabet) = toy::to_empirical_joint(&data)?;
            Ok(Source { joint, alphabet })
        })
        .collect::<Result<_, CliError>>()?;

    let n_r = sources.len();
    let cells: Vec<Result<(f64, bool), CliError>> = (0..cfg.alphas.len() * n_r)
        .into_par_iter()
        .map(|cell| {
            let (a, r) = (cell / n_r, cell % n_r);
            let src = &sources[r];
            let solver_cfg = EibConfig {
                alpha: cfg.alphas[a],
                beta: betas[r],
                t_cardinality: cfg.t_cardinality,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                n_restarts: cfg.n_restarts,
                seed: rng::derive_seed(cfg.seed, &[2, r as u64, a as u64]),
                ..EibConfig::default()
            };
            let (state, trace, _) = solver::solve_eib(&src.joint, &solver_cfg)?;
            Ok((toy::accuracy(&target, toy::solver_predictor(&src.alphabet, &state)), trace.converged))
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(TransferTable {
        alphas: cfg.alphas.clone(),
        source_rs: cfg.source_rs.clone(),
        betas,
        accuracy: cells.chunks(n_r).map(|row| row.iter().map(|c| c.0).collect()).collect(),
        converged: cells.chunks(n_r).map(|row| row.iter().map(|c| c.1).collect()).collect(),
    })
}

pub fn run(cfg: &ToyTransferConfig) -> Result<RunOutput, CliError> {
    let t = table(cfg)?;
    let mut csv = String::from("alpha");
    for r in &t.source_rs {
        csv.push_str(&format!(",qualitative_analog_accuracy_R={r}"));
    }
    csv.push('\n');
    for (a, alpha) in t.alphas.iter().enumerate() {
        csv.push_str(&float(*alpha));
        for acc in &t.accuracy[a] {
            csv.push(',');
            csv.push_str(&float(*acc));
        }
        csv.push('\n');
    }
    let best = t.best();
    let mut best_csv = String::from("source_r,beta,best_alpha,qualitative_analog_best_accuracy\n");
    let mut trend = Vec::new();
    for (r, &(alpha, acc)) in best.iter().enumerate() {
        best_csv.push_str(&format!("{},{},{},{}\n", float(t.source_rs[r]), float(t.betas[r]), float(alpha), float(acc)));
        trend.push(format!("R={} -> alpha {alpha} ({acc:.4})", t.source_rs[r]));
    }
    let series: Vec<Series> = t
        .source_rs
        .iter()
        .enumerate()
        .map(|(r, rv)| Series::new(format!("R = {rv}"), t.alphas.iter().enumerate().map(|(a, &x)| (x, t.accuracy[a][r])).collect()))
        .collect();
    let chart = svg::line_chart(
        &format!("Target accuracy at R = {} (qualitative analog)", cfg.target_r),
        "alpha",
        "accuracy",
        &series,
    );
    let not_converged = t.converged.iter().flatten().filter(|c| !**c).count();
    Ok(RunOutput {
        files: vec![
            OutputFile::text("toy_transfer.csv", csv),
            OutputFile::text("toy_best_alpha.csv", best_csv),
            OutputFile::text("toy_transfer.svg", chart),
        ],
        not_converged,
        warnings: t.betas.iter().filter_map(|&b| beta_warning(b)).collect(),
        report: format!("best alpha by source noise level (qualitative analog): {}", trend.join(", ")),
    })
}
