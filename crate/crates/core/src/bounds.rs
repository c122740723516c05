//! Source generalization bounds, the HΔH distance and the target error
//! decomposition.
//!
//! Two bounds on `|I(Y;T) − Î(Y;T)|` are provided. [`our_bound`] evaluates
//! the entropy-based bound with its explicit constants `C₁ … C₅`.
//! [`previous_bound`] evaluates the earlier mutual-information-based bound in
//! its order form, where the alphabet sizes `|X|` and `|Y|` are replaced by
//! `1 / min_x p(x)` and `1 / min_y p(y)`, the quantities its derivation
//! actually depends on.
//!
//! Both bounds share the plug-in deviation factor
//! `D = (2 + √(2·ln((|Y| + 2)/δ))) / √m`. Every minimum over a distribution
//! is taken over its nonzero entries.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt;
use crate::prob::{self, EmpiricalDraw, Encoder, JointDistribution};
use crate::rng;
use crate::solver::argmax;

/// Default cap on the number of hypotheses `h: T → Y` enumerated.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

const INV_E: f64 = 0.367_879_441_171_442_3;

#[derive(Clone, Debug)]
pub struct BoundInputs {
    pub joint: JointDistribution,
    pub empirical: EmpiricalDraw,
    pub encoder: Encoder,
    pub delta: f64,
}

impl BoundInputs {
    pub fn new(joint: JointDistribution, empirical: EmpiricalDraw, encoder: Encoder, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1)")));
        }
        if empirical.nx() != joint.nx() || empirical.ny() != joint.ny() {
            return Err(Error::DimensionMismatch(format!(
                "empirical draw is {}×{}, joint is {}×{}",
                empirical.nx(),
                empirical.ny(),
                joint.nx(),
                joint.ny()
            )));
        }
        if encoder.nx() != joint.nx() {
            return Err(Error::DimensionMismatch(format!(
                "encoder has {} rows, joint has |X| = {}",
                encoder.nx(),
                joint.nx()
            )));
        }
        Ok(Self { joint, empirical, encoder, delta })
    }

    pub fn m(&self) -> u64 {
        self.empirical.m()
    }
}

/// `(2 + √(2·ln((|Y| + 2)/δ))) / √m`.
pub fn deviation_factor(m: u64, y_card: usize, delta: f64) -> f64 {
    numerator(y_card, delta) / (m as f64).sqrt()
}

fn numerator(y_card: usize, delta: f64) -> f64 {
    2.0 + (2.0 * ((y_card as f64 + 2.0) / delta).ln()).sqrt()
}

fn min_positive<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values.into_iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
}

fn require_labels_present(joint: &JointDistribution) -> Result<Vec<f64>> {
    let py = joint.marginal_y();
    if let Some(y) = py.iter().position(|&v| v == 0.0) {
        return Err(Error::DegenerateDistribution(format!(
            "label {y} has zero probability, so p(x|y) has empty support"
        )));
    }
    Ok(py)
}

/// `|I(Y;T) − Î(Y;T)|` with the same encoder applied to both joints.
pub fn generalization_gap(inputs: &BoundInputs) -> Result<f64> {
    let pop = prob::mutual_information(&inputs.joint.encode(&inputs.encoder)?);
    let emp = prob::mutual_information(&inputs.empirical.empirical_joint().encode(&inputs.encoder)?);
    Ok((pop - emp).abs())
}

/// `H(T|Y)` from a `(t, y)` joint.
fn conditional_entropy_t_given_y(pty: &JointDistribution) -> f64 {
    let h = prob::entropy_raw(pty.probs()) - prob::entropy_raw(&pty.marginal_y());
    h.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinProbs {
    pub x: f64,
    pub t: f64,
    pub x_given_y: f64,
    pub t_given_y: f64,
    pub y_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OurConstraints {
    /// `0 < C ≤ 1`.
    pub a37: bool,
    /// `C·√(p(t)(1 − p(t))) ≤ 1/e` for every `t`.
    pub a38: bool,
    /// `0 < C' ≤ 1`.
    pub a39: bool,
    /// `C'·√(p(t|y)(1 − p(t|y))) ≤ 1/e` for every `t, y`.
    pub a40: bool,
}

impl OurConstraints {
    pub fn all(&self) -> bool {
        self.a37 && self.a38 && self.a39 && self.a40
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OurBoundReport {
    pub d_const: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub h_t: f64,
    pub h_t_given_y: f64,
    pub h_hat_t_given_y: f64,
    pub term_tcard: f64,
    pub term_ht: f64,
    pub term_htgy: f64,
    pub term_hat: f64,
    pub total: f64,
    pub constraints: OurConstraints,
    pub constraints_ok: bool,
    pub min_probs: MinProbs,
}

/// The entropy-based bound
///
/// ```text
/// (1/√m)·((C₁ + C₃)·√(|T| − 1) + C₂·H(T) + C₄·H(T|Y)
///         + C₅·√((ln|T| − Ĥ(T|Y))·Ĥ(T|Y)))
/// ```
///
/// with `C = D/√min_x p(x)`, `C₁ = −√m·C·ln C`, `C' = D/√min_{x,y} p(x|y)`,
/// `C₃ = −√m·C'·ln C'`, `C₂ = √m·D/√(min p(x)·min p(t))`,
/// `C₄ = √m·D/√(min p(x|y)·min p(t|y))` and `C₅ = √m·D/√min_y p̂(y)`.
/// The total is only a valid bound when `constraints_ok`.
pub fn our_bound(inputs: &BoundInputs) -> Result<OurBoundReport> {
    let joint = &inputs.joint;
    let enc = &inputs.encoder;
    let py = require_labels_present(joint)?;
    let m = inputs.m();
    let sqrt_m = (m as f64).sqrt();
    let nt = enc.nt();
    let d = deviation_factor(m, joint.ny(), inputs.delta);

    let px = joint.marginal_x();
    let pty = joint.encode(enc)?;
    let pt = pty.marginal_x();
    let mut pxgy = Vec::with_capacity(joint.nx() * joint.ny());
    let mut ptgy = Vec::with_capacity(nt * joint.ny());
    for (y, &w) in py.iter().enumerate() {
        pxgy.extend((0..joint.nx()).map(|x| joint.prob(x, y) / w));
        ptgy.extend((0..nt).map(|t| pty.prob(t, y) / w));
    }

    let emp = inputs.empirical.empirical_joint();
    let py_hat = emp.marginal_y();
    let h_hat = conditional_entropy_t_given_y(&emp.encode(enc)?);

    let min_probs = MinProbs {
        x: min_positive(&px),
        t: min_positive(&pt),
        x_given_y: min_positive(&pxgy),
        t_given_y: min_positive(&ptgy),
        y_hat: min_positive(&py_hat),
    };

    let c = d / min_probs.x.sqrt();
    let c_prime = d / min_probs.x_given_y.sqrt();
    let constraints = OurConstraints {
        a37: c > 0.0 && c <= 1.0,
        a38: pt.iter().all(|&p| c * (p * (1.0 - p)).max(0.0).sqrt() <= INV_E),
        a39: c_prime > 0.0 && c_prime <= 1.0,
        a40: ptgy.iter().all(|&p| c_prime * (p * (1.0 - p)).max(0.0).sqrt() <= INV_E),
    };

    let c1 = -sqrt_m * c * c.ln();
    let c3 = -sqrt_m * c_prime * c_prime.ln();
    let c2 = sqrt_m * d / (min_probs.x * min_probs.t).sqrt();
    let c4 = sqrt_m * d / (min_probs.x_given_y * min_probs.t_given_y).sqrt();
    let c5 = sqrt_m * d / min_probs.y_hat.sqrt();

    let h_t = prob::entropy_raw(&pt);
    let h_t_given_y = conditional_entropy_t_given_y(&pty);
    let term_tcard = (c1 + c3) * ((nt - 1) as f64).sqrt() / sqrt_m;
    let term_ht = c2 * h_t / sqrt_m;
    let term_htgy = c4 * h_t_given_y / sqrt_m;
    let term_hat = c5 * (((nt as f64).ln() - h_hat) * h_hat).max(0.0).sqrt() / sqrt_m;

    Ok(OurBoundReport {
        d_const: d,
        c1,
        c2,
        c3,
        c4,
        c5,
        h_t,
        h_t_given_y,
        h_hat_t_given_y: h_hat,
        term_tcard,
        term_ht,
        term_htgy,
        term_hat,
        total: term_tcard + term_ht + term_htgy + term_hat,
        constraints_ok: constraints.all(),
        constraints,
        min_probs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevConstraints {
    /// `0 < A < 1` where `A = √((2 + √(2·ln((|Y|+2)/δ)))/m · 2√(2 ln 2)/min_x p(x))`.
    pub a41: bool,
    /// The logarithm's argument `2G` lies below one, so the first term is
    /// positive.
    pub log_argument_below_one: bool,
    /// `A·p(t)·√D_KL[p(x|t) ‖ p(x)] < 1/e` for every `t`.
    pub a42: bool,
}

impl PrevConstraints {
    pub fn all(&self) -> bool {
        self.a41 && self.log_argument_below_one && self.a42
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrevBoundReport {
    pub d_const: f64,
    /// `G = √(2·ln 2·D/min_x p(x))`.
    pub g: f64,
    /// The quantity `A` constrained by `a41`/`a42`.
    pub a_value: f64,
    pub i_xt: f64,
    pub terms: [f64; 3],
    pub total: f64,
    pub constraints: PrevConstraints,
    pub constraints_ok: bool,
}

/// The mutual-information-based bound in order form,
///
/// ```text
/// −4G·ln(2G)·√|T|·√I(X;T) + 4G·|T|^{3/4}·I(X;T)^{1/4} + 2D·I(X;T)/min_y p(y)
/// ```
///
/// with `G = √(2·ln 2·D/min_x p(x))` and the population `I(X;T)`.
pub fn previous_bound(inputs: &BoundInputs) -> Result<PrevBoundReport> {
    let joint = &inputs.joint;
    let enc = &inputs.encoder;
    let py = require_labels_present(joint)?;
    let m = inputs.m();
    let nt = enc.nt() as f64;
    let d = deviation_factor(m, joint.ny(), inputs.delta);
    let px = joint.marginal_x();
    let min_x = min_positive(&px);
    let min_y = min_positive(&py);

    let pxt = instance_cluster_joint(&px, enc);
    let i_xt = prob::mutual_information_raw(&pxt, joint.nx(), enc.nt()).max(0.0);

    let g = (2.0 * std::f64::consts::LN_2 * d / min_x).sqrt();
    let a = (numerator(joint.ny(), inputs.delta) / m as f64 * 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() / min_x).sqrt();

    let pt = prob::induced_marginal(joint, enc)?;
    let mut a42 = true;
    for (t, &p) in pt.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let kl: f64 = (0..joint.nx())
            .filter(|&x| pxt[x * enc.nt() + t] > 0.0)
            .map(|x| {
                let pxgt = pxt[x * enc.nt() + t] / p;
                pxgt * (pxgt / px[x]).ln()
            })
            .sum::<f64>()
            .max(0.0);
        if !(a * p * kl.sqrt() < INV_E) {
            a42 = false;
        }
    }
    let constraints = PrevConstraints { a41: a > 0.0 && a < 1.0, log_argument_below_one: 2.0 * g < 1.0, a42 };

    let terms = [
        -4.0 * g * (2.0 * g).ln() * nt.sqrt() * i_xt.sqrt(),
        4.0 * g * nt.powf(0.75) * i_xt.powf(0.25),
        2.0 * d / min_y * i_xt,
    ];
    Ok(PrevBoundReport {
        d_const: d,
        g,
        a_value: a,
        i_xt,
        terms,
        total: terms.iter().sum(),
        constraints_ok: constraints.all(),
        constraints,
    })
}

/// Row-major `p(x, t) = p(x)·p(t|x)`.
fn instance_cluster_joint(px: &[f64], enc: &Encoder) -> Vec<f64> {
    let nt = enc.nt();
    let mut out = vec![0.0; px.len() * nt];
    for (x, &w) in px.iter().enumerate() {
        for (t, &v) in enc.row(x).iter().enumerate() {
            out[x * nt + t] = w * v;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Entries drawn from `U(0, 1)`.
    Uniform,
    /// Entries drawn from `|N(0, 1)|`.
    Normal,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Uniform => "uniform",
            Generator::Normal => "normal",
        }
    }

    fn draw(self, rng: &mut rng::Rng) -> f64 {
        match self {
            Generator::Uniform => rng.gen::<f64>(),
            Generator::Normal => rng.sample::<f64, _>(StandardNormal).abs(),
        }
    }

    fn vector(self, rng: &mut rng::Rng, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.draw(rng)).collect();
            let z: f64 = v.iter().sum();
            if z > 0.0 {
                return v.iter().map(|e| e / z).collect();
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub ms: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub generator: Generator,
    pub delta: f64,
    pub x_card: usize,
    pub t_card: usize,
    pub y_card: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            ms: (1..=6).map(|k| 10u64.pow(k)).collect(),
            trials: 100,
            seed: 0,
            generator: Generator::Uniform,
            delta: 0.1,
            x_card: 3,
            t_card: 2,
            y_card: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOutcome {
    pub total: f64,
    pub constraints_ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: u64,
    pub trial: usize,
    pub gap: f64,
    pub ours: BoundOutcome,
    pub previous: BoundOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: u64,
    pub bound: &'static str,
    pub error_rate: f64,
    /// Mean total over constraint-satisfying trials; `None` if there were none.
    pub mean_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

impl SimulationResult {
    pub const TRIALS_HEADER: &'static str = "m,trial,bound,constraints_ok,value,gap";
    pub const SUMMARY_HEADER: &'static str = "m,bound,error_rate,mean_value";

    pub fn trials_csv(&self) -> String {
        let mut out = format!("{}\n", Self::TRIALS_HEADER);
        for r in &self.trials {
            for (name, o) in [("ours", r.ours), ("previous", r.previous)] {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.m,
                    r.trial,
                    name,
                    o.constraints_ok,
                    fmt::float(o.total),
                    fmt::float(r.gap)
                ));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{}\n", Self::SUMMARY_HEADER);
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.m,
                s.bound,
                fmt::float(s.error_rate),
                fmt::opt_float(s.mean_value)
            ));
        }
        out
    }

    pub fn summary_for(&self, m: u64, bound: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.m == m && s.bound == bound)
    }
}

/// One trial: random joint and encoder, an empirical draw of size `m`, and
/// both bounds evaluated on it.
pub fn simulation_trial(cfg: &SimulationConfig, m_index: usize, trial: usize) -> Result<TrialRecord> {
    let m = cfg.ms[m_index];
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, &[m_index as u64, trial as u64]));
    let joint = JointDistribution::from_flat(cfg.x_card, cfg.y_card, cfg.generator.vector(&mut rng, cfg.x_card * cfg.y_card))?;
    let mut enc = Vec::with_capacity(cfg.x_card * cfg.t_card);
    for _ in 0..cfg.x_card {
        enc.extend(cfg.generator.vector(&mut rng, cfg.t_card));
    }
    let encoder = Encoder::from_flat(cfg.x_card, cfg.t_card, enc)?;
    let empirical = prob::sample_empirical(&joint, m, rng.gen())?;
    let inputs = BoundInputs::new(joint, empirical, encoder, cfg.delta)?;
    let ours = our_bound(&inputs)?;
    let prev = previous_bound(&inputs)?;
    Ok(TrialRecord {
        m,
        trial,
        gap: generalization_gap(&inputs)?,
        ours: BoundOutcome { total: ours.total, constraints_ok: ours.constraints_ok },
        previous: BoundOutcome { total: prev.total, constraints_ok: prev.constraints_ok },
    })
}

/// Runs `trials` independent trials at every `m` of the grid in parallel and
/// summarizes, per `m` and bound, the share of trials violating the sample
/// size constraints and the mean bound over the remaining trials.
pub fn bound_simulation(cfg: &SimulationConfig) -> Result<SimulationResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.ms.is_empty() || cfg.ms.contains(&0) {
        return Err(Error::InvalidArgument("m grid must be non-empty and positive".into()));
    }
    if cfg.x_card == 0 || cfg.t_card == 0 || cfg.y_card == 0 {
        return Err(Error::InvalidArgument("alphabet sizes must be positive".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.ms.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(i, t)| simulation_trial(cfg, i, t))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    for (i, &m) in cfg.ms.iter().enumerate() {
        let chunk = &trials[i * cfg.trials..(i + 1) * cfg.trials];
        for (name, pick) in [
            ("ours", (|r: &TrialRecord| r.ours) as fn(&TrialRecord) -> BoundOutcome),
            ("previous", |r: &TrialRecord| r.previous),
        ] {
            let ok: Vec<f64> = chunk.iter().map(pick).filter(|o| o.constraints_ok).map(|o| o.total).collect();
            summary.push(SummaryRow {
                m,
                bound: name,
                error_rate: (cfg.trials - ok.len()) as f64 / cfg.trials as f64,
                mean_value: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
            });
        }
    }
    Ok(SimulationResult { trials, summary })
}

/// Calls `visit` with every map `h: T → Y` in lexicographic order, `h(0)`
/// being the most significant digit.
fn for_each_map(nt: usize, ny: usize, budget: u64, mut visit: impl FnMut(&[usize])) -> Result<()> {
    let needed = (ny as f64).powi(nt as i32);
    if needed > budget as f64 {
        return Err(Error::EnumerationBudgetExceeded { needed, budget });
    }
    let mut h = vec![0usize; nt];
    loop {
        visit(&h);
        let mut i = nt;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            h[i] += 1;
            if h[i] < ny {
                break;
            }
            h[i] = 0;
        }
    }
}

fn check_map(h: &[usize], nt: usize, ny: usize, what: &str) -> Result<()> {
    if h.len() != nt {
        return Err(Error::LengthMismatch { left: h.len(), right: nt });
    }
    if let Some(&bad) = h.iter().find(|&&y| y >= ny) {
        return Err(Error::InvalidArgument(format!("{what} maps to label {bad} outside |Y| = {ny}")));
    }
    Ok(())
}

/// Mass on which `h` and `g` disagree under `p`.
fn disagreement(p: &[f64], h: &[usize], g: &[usize]) -> f64 {
    p.iter().zip(h.iter().zip(g)).filter(|(_, (a, b))| a != b).fold(0.0, |acc, (w, _)| acc + w)
}

/// `sup_h |E_p 1{h*(t) ≠ h(t)} − E_q 1{h*(t) ≠ h(t)}|` over every `h: T → Y`,
/// within the default enumeration budget.
pub fn hdh_distance_exhaustive(p_t: &[f64], q_t: &[f64], h_star: &[usize], y_card: usize) -> Result<f64> {
    hdh_distance_with_budget(p_t, q_t, h_star, y_card, DEFAULT_ENUMERATION_BUDGET)
}

pub fn hdh_distance_with_budget(p_t: &[f64], q_t: &[f64], h_star: &[usize], y_card: usize, budget: u64) -> Result<f64> {
    if p_t.len() != q_t.len() {
        return Err(Error::LengthMismatch { left: p_t.len(), right: q_t.len() });
    }
    let p = prob::validate_distribution(p_t)?;
    let q = prob::validate_distribution(q_t)?;
    check_map(h_star, p.len(), y_card, "h*")?;
    let diff: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
    let mut best = 0.0f64;
    for_each_map(p.len(), y_card, budget, |h| {
        best = best.max(disagreement(&diff, h, h_star).abs());
    })?;
    Ok(best.min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub h: Vec<usize>,
    pub h_star: Vec<usize>,
    /// Shared labeling `f(t) = argmax_y p_S(y|t)`.
    pub labeling: Vec<usize>,
    pub eps_target: f64,
    pub eps_source: f64,
    pub eps_source_emp: f64,
    pub delta_s: f64,
    pub d_hdh: f64,
    pub lambda: f64,
    pub rhs: f64,
    pub holds: bool,
}

struct DecompositionSetup {
    p_t: Vec<f64>,
    q_t: Vec<f64>,
    p_hat_t: Vec<f64>,
    labeling: Vec<usize>,
    h_star: Vec<usize>,
    lambda: f64,
    ny: usize,
}

fn decomposition_setup(
    source: &JointDistribution,
    target: &JointDistribution,
    encoder: &Encoder,
    empirical_source: &EmpiricalDraw,
    budget: u64,
) -> Result<DecompositionSetup> {
    if source.ny() != target.ny() {
        return Err(Error::DimensionMismatch(format!(
            "source has |Y| = {}, target has |Y| = {}",
            source.ny(),
            target.ny()
        )));
    }
    if empirical_source.nx() != source.nx() || empirical_source.ny() != source.ny() {
        return Err(Error::DimensionMismatch("empirical draw does not match the source joint".into()));
    }
    let p_t = prob::induced_marginal(source, encoder)?;
    let q_t = prob::induced_marginal(target, encoder)?;
    let p_hat_t = prob::induced_marginal(&empirical_source.empirical_joint(), encoder)?;
    let decoder = prob::induced_decoder(source, encoder)?;
    let labeling: Vec<usize> = (0..encoder.nt()).map(|t| argmax(decoder.row(t))).collect();

    let ny = source.ny();
    let mut h_star = labeling.clone();
    let mut lambda = f64::INFINITY;
    for_each_map(encoder.nt(), ny, budget, |h| {
        let joint_err = disagreement(&p_t, h, &labeling) + disagreement(&q_t, h, &labeling);
        if joint_err < lambda {
            lambda = joint_err;
            h_star.copy_from_slice(h);
        }
    })?;
    Ok(DecompositionSetup { p_t, q_t, p_hat_t, labeling, h_star, lambda, ny })
}

fn decomposition_for(setup: &DecompositionSetup, h: &[usize], d_hdh: f64) -> DecompositionReport {
    let eps_target = disagreement(&setup.q_t, h, &setup.labeling);
    let eps_source = disagreement(&setup.p_t, h, &setup.labeling);
    let eps_source_emp = disagreement(&setup.p_hat_t, h, &setup.labeling);
    let delta_s = (eps_source - eps_source_emp).abs();
    let rhs = eps_source_emp + delta_s + d_hdh + setup.lambda;
    DecompositionReport {
        h: h.to_vec(),
        h_star: setup.h_star.clone(),
        labeling: setup.labeling.clone(),
        eps_target,
        eps_source,
        eps_source_emp,
        delta_s,
        d_hdh,
        lambda: setup.lambda,
        rhs,
        holds: eps_target <= rhs + 1e-12,
    }
}

/// Evaluates every term of the target error decomposition for hypothesis
/// `h: T → Y` and checks the inequality.
///
/// The labeling `f(t) = argmax_y p_S(y|t)` comes from the source through the
/// shared encoder (smallest label on ties, label 0 for clusters the source
/// never uses). `h*` minimizes `ε_S + ε_T` over all maps `T → Y`.
pub fn verify_decomposition(
    source: &JointDistribution,
    target: &JointDistribution,
    encoder: &Encoder,
    empirical_source: &EmpiricalDraw,
    h: &[usize],
) -> Result<DecompositionReport> {
    verify_decomposition_with_budget(source, target, encoder, empirical_source, h, DEFAULT_ENUMERATION_BUDGET)
}

pub fn verify_decomposition_with_budget(
    source: &JointDistribution,
    target: &JointDistribution,
    encoder: &Encoder,
    empirical_source: &EmpiricalDraw,
    h: &[usize],
    budget: u64,
) -> Result<DecompositionReport> {
    check_map(h, encoder.nt(), source.ny(), "h")?;
    let setup = decomposition_setup(source, target, encoder, empirical_source, budget)?;
    let d = hdh_distance_with_budget(&setup.p_t, &setup.q_t, &setup.h_star, setup.ny, budget)?;
    Ok(decomposition_for(&setup, h, d))
}

/// [`verify_decomposition`] for every hypothesis of the class, in
/// lexicographic order.
pub fn verify_decomposition_all(
    source: &JointDistribution,
    target: &JointDistribution,
    encoder: &Encoder,
    empirical_source: &EmpiricalDraw,
    budget: u64,
) -> Result<Vec<DecompositionReport>> {
    let setup = decomposition_setup(source, target, encoder, empirical_source, budget)?;
    let d = hdh_distance_with_budget(&setup.p_t, &setup.q_t, &setup.h_star, setup.ny, budget)?;
    let mut out = Vec::new();
    for_each_map(encoder.nt(), setup.ny, budget, |h| out.push(decomposition_for(&setup, h, d)))?;
    Ok(out)
}
