use std::path::Path;

use eib_core::bounds::{self, DecompositionReport};
use eib_core::fmt::float;
use eib_core::prob;
use eib_core::solver;
use serde::Serialize;

use super::{OutputFile, RunOutput};
use crate::config::{DecomposeConfig, EmpiricalSource, EncoderSource, ReportMode};
use crate::error::CliError;

#[derive(Serialize)]
struct DecompositionFile<'a> {
    hypotheses: usize,
    all_hold: bool,
    /// Smallest `rhs − ε_T` over the class.
    min_slack: f64,
    tightest: &'a DecompositionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reports: Option<&'a [DecompositionReport]>,
}

pub fn reports(cfg: &DecomposeConfig, base: &Path) -> Result<(Vec<DecompositionReport>, bool), CliError> {
    let (source, _) = cfg.source.load(base)?;
    let (target, _) = cfg.target.load(base)?;
    let (encoder, converged) = match &cfg.encoder {
        EncoderSource::Inline(e) => (e.clone(), true),
        EncoderSource::Solve(c) => {
            let (state, trace, _) = solver::solve_eib(&source, c)?;
            (state.encoder, trace.converged)
        }
    };
    let draw = match &cfg.empirical {
        EmpiricalSource::Sample { m, seed } => prob::sample_empirical(&source, *m, *seed)?,
        EmpiricalSource::Counts(d) => d.clone(),
    };
    Ok((bounds::verify_decomposition_all(&source, &target, &encoder, &draw, cfg.budget)?, converged))
}

pub fn run(cfg: &DecomposeConfig, base: &Path) -> Result<RunOutput, CliError> {
    let (reps, converged) = reports(cfg, base)?;
    let slack = |r: &DecompositionReport| r.rhs - r.eps_target;
    let tightest = reps
        .iter()
        .fold(&reps[0], |best, r| if slack(r) < slack(best) { r } else { best });
    let all_hold = reps.iter().all(|r| r.holds);
    let file = DecompositionFile {
        hypotheses: reps.len(),
        all_hold,
        min_slack: slack(tightest),
        tightest,
        reports: (cfg.mode == ReportMode::All).then_some(&reps[..]),
    };
    let mut files = vec![OutputFile::json("decomposition.json", &file)?];
    if cfg.mode == ReportMode::All {
        let mut csv = String::from("h,eps_target,eps_source,eps_source_emp,delta_s,d_hdh,lambda,rhs,holds\n");
        for r in &reps {
            let h: Vec<String> = r.h.iter().map(usize::to_string).collect();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                h.join("-"),
                float(r.eps_target),
                float(r.eps_source),
                float(r.eps_source_emp),
                float(r.delta_s),
                float(r.d_hdh),
                float(r.lambda),
                float(r.rhs),
                r.holds
            ));
        }
        files.push(OutputFile::text("decomposition.csv", csv));
    }
    Ok(RunOutput {
        files,
        not_converged: usize::from(!converged),
        warnings: Vec::new(),
        report: format!(
            "{} hypotheses, decomposition {} (min slack {:.3e})",
            reps.len(),
            if all_hold { "holds for all" } else { "FAILS for some" },
            file.min_slack
        ),
    })
}
