use eib_core::gauss;
use eib_core::gauss::PairingResult;
use serde::Serialize;

use super::{OutputFile, RunOutput};
use crate::config::GaussConfig;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub formula: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    /// `formula − monte_carlo`.
    pub gap: f64,
    /// `|gap|` in standard errors; absent when the estimate has no spread.
    pub gap_in_standard_errors: Option<f64>,
}

impl OracleComparison {
    fn new(formula: f64, (monte_carlo, standard_error): (f64, f64)) -> Self {
        let gap = formula - monte_carlo;
        let z = (standard_error > 0.0).then(|| gap.abs() / standard_error);
        Self { formula, monte_carlo, standard_error, gap, gap_in_standard_errors: z }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularizerReport {
    pub alpha: f64,
    #[serde(flatten)]
    pub comparison: OracleComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingReport {
    pub total_l1: f64,
    pub epsilon: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussReport {
    pub l1: OracleComparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingReport>,
}

pub fn report(cfg: &GaussConfig) -> Result<(GaussReport, Option<PairingResult>), CliError> {
    let l1 = OracleComparison::new(
        gauss::l1_shared_cov(&cfg.g1, &cfg.g2)?,
        gauss::l1_monte_carlo(&cfg.g1, &cfg.g2, cfg.mc_samples, cfg.seed)?,
    );
    let regularizer = cfg
        .regularizer_alpha
        .map(|alpha| -> Result<_, CliError> {
            Ok(RegularizerReport {
                alpha,
                comparison: OracleComparison::new(
                    gauss::eib_var_regularizer(&cfg.g1, &cfg.g2, alpha)?,
                    gauss::eib_var_regularizer_monte_carlo(&cfg.g1, &cfg.g2, alpha, cfg.mc_samples, cfg.seed)?,
                ),
            })
        })
        .transpose()?;
    let pairing = cfg
        .pairing
        .as_ref()
        .map(|p| gauss::prop1_pairing(&p.source, &p.target, p.t_card, p.delta))
        .transpose()?;
    let pairing_report = pairing.as_ref().map(|p| {
        let epsilon = p.epsilon.unwrap_or(0.0);
        PairingReport { total_l1: p.total_l1, epsilon, bound: p.total_l1 / p.pairs.len() as f64 + epsilon }
    });
    Ok((GaussReport { l1, regularizer, pairing: pairing_report }, pairing))
}

pub fn run(cfg: &GaussConfig) -> Result<RunOutput, CliError> {
    let (rep, pairing) = report(cfg)?;
    let mut lines = vec![format!(
        "L1 formula {:.10}  Monte Carlo {:.10} ± {:.2e}  gap {:.3e}",
        rep.l1.formula, rep.l1.monte_carlo, rep.l1.standard_error, rep.l1.gap
    )];
    if let Some(r) = &rep.regularizer {
        lines.push(format!(
            "regularizer (alpha = {}) closed form {:.10}  Monte Carlo {:.10} ± {:.2e}",
            r.alpha, r.comparison.formula, r.comparison.monte_carlo, r.comparison.standard_error
        ));
    }
    let mut files = vec![OutputFile::json("gauss.json", &rep)?];
    if let (Some(p), Some(r)) = (pairing, &rep.pairing) {
        lines.push(format!("pairing bound {:.10}", r.bound));
        files.push(OutputFile::text("pairing.csv", p.to_csv()));
    }
    Ok(RunOutput { files, report: lines.join("\n"), ..RunOutput::default() })
}
