use std::path::Path;

use eib_core::bounds;
use eib_core::fmt::float;
use eib_core::prob::{self, Encoder};
use eib_core::solver::{self, EibConfig, SolveState};
use eib_core::toy::{self, ToyConfig};
use eib_core::{rng, JointDistribution};
use serde::Serialize;

use super::{beta_warning, OutputFile, RunOutput};
use crate::config::{Domains, RdCompareConfig};
use crate::error::CliError;

/// Differences this small come from summing probabilities in another order.
const ROUNDING: f64 = 1e-12;

/// Discrepancy between source and target representation marginals under one
/// solved encoder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodDiscrepancy {
    pub method: &'static str,
    pub alpha: f64,
    pub p_t: Vec<f64>,
    pub q_t: Vec<f64>,
    pub h_star: Vec<usize>,
    pub tv: f64,
    pub hdh: f64,
    pub converged: bool,
}

/// Target data expressed through the source's instance alphabet.
enum Target {
    Joint(JointDistribution),
    /// Weight of each source instance after mapping target instances onto
    /// their nearest seen source instance.
    Mapped(Vec<f64>),
}

impl Target {
    fn marginal(&self, enc: &Encoder) -> Result<Vec<f64>, CliError> {
        match self {
            Target::Joint(j) => Ok(prob::induced_marginal(j, enc)?),
            Target::Mapped(w) => {
                let mut q = vec![0.0; enc.nt()];
                for (x, &wx) in w.iter().enumerate() {
                    for (qt, &e) in q.iter_mut().zip(enc.row(x)) {
                        *qt += wx * e;
                    }
                }
                Ok(q)
            }
        }
    }
}

/// Index of the alphabet entry nearest to `x` in Hamming distance; the
/// smallest value wins ties. `alphabet` is sorted ascending.
pub fn nearest_seen(alphabet: &[u64], x: u64) -> usize {
    if let Ok(i) = alphabet.binary_search(&x) {
        return i;
    }
    let mut best = 0;
    for (i, &a) in alphabet.iter().enumerate() {
        if (a ^ x).count_ones() < (alphabet[best] ^ x).count_ones() {
            best = i;
        }
    }
    best
}

fn domains(d: &Domains, base: &Path) -> Result<(JointDistribution, Target), CliError> {
    match d {
        Domains::Toy { source_r, target_r, m, seed } => {
            let src = toy::generate(&ToyConfig::new(*source_r, *m, rng::derive_seed(*seed, &[0])))?;
            let tgt = toy::generate(&ToyConfig::new(*target_r, *m, rng::derive_seed(*seed, &[1])))?;
            let (joint, alphabet) = toy::to_empirical_joint(&src)?;
            let mut w = vec![0.0; alphabet.len()];
            for &x in &tgt.instances {
                w[nearest_seen(&alphabet, x)] += 1.0 / tgt.len() as f64;
            }
            Ok((joint, Target::Mapped(w)))
        }
        Domains::Joints { source, target } => {
            let (s, _) = source.load(base)?;
            let (t, _) = target.load(base)?;
            if (s.nx(), s.ny()) != (t.nx(), t.ny()) {
                return Err(CliError::Input(format!(
                    "source is {}x{} but target is {}x{}",
                    s.nx(),
                    s.ny(),
                    t.nx(),
                    t.ny()
                )));
            }
            Ok((s, Target::Joint(t)))
        }
    }
}

fn bayes_labels(state: &SolveState) -> Vec<usize> {
    (0..state.nt())
        .map(|t| {
            if !state.decoder.is_live(t) {
                return 0;
            }
            let row = state.decoder.row(t);
            (0..row.len()).fold(0, |b, y| if row[y] > row[b] { y } else { b })
        })
        .collect()
}

pub fn compare(cfg: &RdCompareConfig, base: &Path) -> Result<Vec<MethodDiscrepancy>, CliError> {
    let (source, target) = domains(&cfg.domains, base)?;
    [("dib", 0.0), ("ib", 1.0)]
        .into_iter()
        .map(|(method, alpha)| {
            let c = EibConfig { alpha, ..cfg.solver.clone() };
            let (state, trace, _) = solver::solve_eib(&source, &c)?;
            let p_t = state.marginal_t.clone();
            let q_t = target.marginal(&state.encoder)?;
            let h_star = bayes_labels(&state);
            let tv = 0.5 * p_t.iter().zip(&q_t).map(|(p, q)| (p - q).abs()).sum::<f64>();
            let hdh = bounds::hdh_distance_with_budget(&p_t, &q_t, &h_star, source.ny(), cfg.budget)?;
            Ok(MethodDiscrepancy { method, alpha, p_t, q_t, h_star, tv, hdh, converged: trace.converged })
        })
        .collect()
}

pub fn run(cfg: &RdCompareConfig, base: &Path) -> Result<RunOutput, CliError> {
    let rows = compare(cfg, base)?;
    let (dib, ib) = (&rows[0], &rows[1]);
    let mut csv = String::from("method,alpha,tv,hdh\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.method, float(r.alpha), float(r.tv), float(r.hdh)));
    }
    csv.push_str(&format!("ib_minus_dib,,{},{}\n", float(ib.tv - dib.tv), float(ib.hdh - dib.hdh)));
    let diff = ib.hdh - dib.hdh;
    let sign = if diff.abs() <= ROUNDING {
        "equal up to rounding"
    } else if diff > 0.0 {
        "larger"
    } else {
        "smaller"
    };
    Ok(RunOutput {
        files: vec![OutputFile::text("rd_compare.csv", csv), OutputFile::json("rd_compare.json", &rows)?],
        not_converged: rows.iter().filter(|r| !r.converged).count(),
        warnings: beta_warning(cfg.solver.beta).into_iter().collect(),
        report: format!(
            "representation discrepancy: dib {:.6e}, ib {:.6e}; ib is {sign}",
            dib.hdh, ib.hdh
        ),
    })
}
