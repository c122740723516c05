//! Self-consistent iterative solver for the elastic information bottleneck
//!
//! ```text
//! L = (1 − α)·H(T) + α·I(X;T) − β·I(Y;T)
//! ```
//!
//! One iteration recomputes every encoder row as
//! `p(t|x) ∝ exp((ln p(t) − β·D_KL[p(y|x) ‖ p(y|t)]) / α)` and then re-induces
//! `p(t)` and `p(y|t)`. Below `alpha_floor` the division by `α` is replaced by
//! its zero-temperature limit, a hard argmax assignment.
//!
//! Progress is tracked through the free energy
//!
//! ```text
//! F = α·Σ_x p(x)·D_KL[p(t|x) ‖ p(t)]
//!   + (1 − α)·Σ_{x,t} p(x)p(t|x)·ln(1/p(t))
//!   + β·Σ_{x,t} p(x)p(t|x)·D_KL[p(y|x) ‖ p(y|t)]
//! ```
//!
//! which equals `L + β·I(X;Y)` at self-consistent states and never increases
//! along the iteration.

use rand::Rng as _;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt;
use crate::prob::{self, Decoder, Encoder, JointDistribution};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EibConfig {
    pub alpha: f64,
    pub beta: f64,
    pub t_cardinality: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub seed: u64,
    pub alpha_floor: f64,
}

impl Default for EibConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 5.0,
            t_cardinality: 2,
            tol: 1e-9,
            max_iter: 10_000,
            n_restarts: 10,
            seed: 0,
            alpha_floor: 1e-4,
        }
    }
}

impl EibConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be positive", self.beta));
        }
        if self.t_cardinality == 0 {
            return bad("t_cardinality must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.n_restarts == 0 {
            return bad("n_restarts must be at least 1".into());
        }
        if !(self.alpha_floor > 0.0) {
            return bad(format!("alpha_floor = {} must be positive", self.alpha_floor));
        }
        Ok(())
    }

    /// Whether iterations use the hard assignment step.
    pub fn deterministic_limit(&self) -> bool {
        self.alpha < self.alpha_floor
    }
}

/// An encoder together with the marginal and decoder it induces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveState {
    pub encoder: Encoder,
    pub marginal_t: Vec<f64>,
    pub decoder: Decoder,
}

impl SolveState {
    pub fn from_encoder(joint: &JointDistribution, encoder: Encoder) -> Result<Self> {
        let marginal_t = prob::induced_marginal(joint, &encoder)?;
        let decoder = prob::induced_decoder(joint, &encoder)?;
        Ok(Self { encoder, marginal_t, decoder })
    }

    pub fn nt(&self) -> usize {
        self.encoder.nt()
    }
}

/// Information-plane coordinates of a state, in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoSummary {
    pub h_t: f64,
    pub h_t_given_x: f64,
    pub h_t_given_y: f64,
    pub i_xt: f64,
    pub i_yt: f64,
    pub f_eib: f64,
    pub l_eib: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub f_eib: f64,
    /// `None` for the initial state.
    pub max_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub restart_index: usize,
}

impl SolveTrace {
    pub const CSV_HEADER: &'static str = "iter,f_eib,max_delta";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.iter, fmt::float(r.f_eib), fmt::opt_float(r.max_delta)));
        }
        out
    }

    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iter)
    }
}

/// Per-row scores `ln p(t) − β·D_KL[p(y|x) ‖ p(y|t)]`. Dead clusters and
/// clusters whose decoder misses the support of `p(y|x)` score `−∞`. Rows with
/// `p(x) = 0` carry no label information and keep only the `ln p(t)` part.
fn scores(state: &SolveState, joint: &JointDistribution, beta: f64, x: usize) -> Vec<f64> {
    let pyx = joint.label_given_instance(x);
    (0..state.nt())
        .map(|t| {
            let pt = state.marginal_t[t];
            if pt <= 0.0 || !state.decoder.is_live(t) {
                return f64::NEG_INFINITY;
            }
            match &pyx {
                Some(p) => pt.ln() - beta * prob::kl_raw(p, state.decoder.row(t)),
                None => pt.ln(),
            }
        })
        .collect()
}

fn check_dims(state: &SolveState, joint: &JointDistribution) -> Result<()> {
    if state.encoder.nx() != joint.nx() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} instances, joint has {}",
            state.encoder.nx(),
            joint.nx()
        )));
    }
    if state.decoder.ny() != joint.ny() {
        return Err(Error::DimensionMismatch(format!(
            "state decodes {} labels, joint has {}",
            state.decoder.ny(),
            joint.ny()
        )));
    }
    Ok(())
}

/// One soft update of every encoder row followed by re-induction of the
/// marginal and decoder. Requires `alpha ≥ alpha_floor`.
pub fn eib_update_step(state: &SolveState, joint: &JointDistribution, cfg: &EibConfig) -> Result<SolveState> {
    cfg.validate()?;
    if cfg.deterministic_limit() {
        return Err(Error::InvalidArgument(format!(
            "alpha = {} is below alpha_floor = {}; use the assignment step",
            cfg.alpha, cfg.alpha_floor
        )));
    }
    check_dims(state, joint)?;
    let nt = state.nt();
    let mut probs = Vec::with_capacity(joint.nx() * nt);
    for x in 0..joint.nx() {
        let s = scores(state, joint, cfg.beta, x);
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::AllClustersDead { x });
        }
        let w: Vec<f64> = s.iter().map(|&v| ((v - top) / cfg.alpha).exp()).collect();
        let z: f64 = w.iter().sum();
        // subnormal probabilities carry almost no precision; treat them as 0
        probs.extend(w.iter().map(|v| v / z).map(|p| if p < f64::MIN_POSITIVE { 0.0 } else { p }));
    }
    SolveState::from_encoder(joint, Encoder::from_flat_unchecked(joint.nx(), nt, probs))
}

/// Hard assignment of every instance to its best-scoring cluster, the
/// `α → 0` limit of [`eib_update_step`]. Ties go to the smallest index.
pub fn dib_assignment_step(state: &SolveState, joint: &JointDistribution, cfg: &EibConfig) -> Result<SolveState> {
    cfg.validate()?;
    if !cfg.deterministic_limit() {
        return Err(Error::InvalidArgument(format!(
            "alpha = {} is not below alpha_floor = {}; use the soft update",
            cfg.alpha, cfg.alpha_floor
        )));
    }
    check_dims(state, joint)?;
    let nt = state.nt();
    let mut probs = vec![0.0; joint.nx() * nt];
    for x in 0..joint.nx() {
        let s = scores(state, joint, cfg.beta, x);
        let mut best = None;
        for (t, &v) in s.iter().enumerate() {
            if v > f64::NEG_INFINITY && best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        let (t, _) = best.ok_or(Error::AllClustersDead { x })?;
        probs[x * nt + t] = 1.0;
    }
    SolveState::from_encoder(joint, Encoder::from_flat_unchecked(joint.nx(), nt, probs))
}

/// Dispatches to the soft update or the hard assignment depending on `α`.
pub fn step(state: &SolveState, joint: &JointDistribution, cfg: &EibConfig) -> Result<SolveState> {
    if cfg.deterministic_limit() {
        dib_assignment_step(state, joint, cfg)
    } else {
        eib_update_step(state, joint, cfg)
    }
}

pub fn free_energy(state: &SolveState, joint: &JointDistribution, cfg: &EibConfig) -> f64 {
    let px = joint.marginal_x();
    let (a, b) = (cfg.alpha, cfg.beta);
    let mut compress = 0.0;
    let mut entropy = 0.0;
    let mut distortion = 0.0;
    for (x, &w) in px.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let pyx = joint.label_given_instance(x).expect("p(x) > 0");
        for (t, &ptx) in state.encoder.row(x).iter().enumerate() {
            let mass = w * ptx;
            // underflowed mass contributes nothing, and p(t) may itself be 0
            if mass == 0.0 {
                continue;
            }
            let pt = state.marginal_t[t];
            compress += mass * (ptx / pt).ln();
            entropy -= mass * pt.ln();
            distortion += mass * prob::kl_raw(&pyx, state.decoder.row(t));
        }
    }
    let f = a * compress + (1.0 - a) * entropy + b * distortion;
    if (-1e-10..0.0).contains(&f) {
        0.0
    } else {
        f
    }
}

fn clamp_small(v: f64) -> f64 {
    if (-1e-10..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

pub fn info_summary(state: &SolveState, joint: &JointDistribution, cfg: &EibConfig) -> InfoSummary {
    let px = joint.marginal_x();
    let h_t = prob::entropy_raw(&state.marginal_t);
    let h_t_given_x: f64 = px
        .iter()
        .enumerate()
        .map(|(x, &w)| w * prob::entropy_raw(state.encoder.row(x)))
        .sum();
    let py = joint.marginal_y();
    let nt = state.nt();
    let mut h_t_given_y = 0.0;
    for (y, &wy) in py.iter().enumerate() {
        if wy == 0.0 {
            continue;
        }
        let mut pty = vec![0.0; nt];
        for x in 0..joint.nx() {
            let pxy = joint.prob(x, y);
            if pxy == 0.0 {
                continue;
            }
            for (acc, v) in pty.iter_mut().zip(state.encoder.row(x)) {
                *acc += pxy * v / wy;
            }
        }
        h_t_given_y += wy * prob::entropy_raw(&pty);
    }
    let i_xt = clamp_small(h_t - h_t_given_x);
    let i_yt = clamp_small(h_t - h_t_given_y);
    InfoSummary {
        h_t,
        h_t_given_x,
        h_t_given_y,
        i_xt,
        i_yt,
        f_eib: free_energy(state, joint, cfg),
        l_eib: (1.0 - cfg.alpha) * h_t + cfg.alpha * i_xt - cfg.beta * i_yt,
    }
}

/// Predicted label `argmax_y Σ_t p(t|x)·p(y|t)`, ties to the smallest index.
pub fn classify(state: &SolveState, x: usize) -> Result<usize> {
    if x >= state.encoder.nx() {
        return Err(Error::UnknownInstance { index: x, size: state.encoder.nx() });
    }
    let ny = state.decoder.ny();
    let mut score = vec![0.0; ny];
    for (t, &ptx) in state.encoder.row(x).iter().enumerate() {
        if ptx == 0.0 {
            continue;
        }
        for (acc, v) in score.iter_mut().zip(state.decoder.row(t)) {
            *acc += ptx * v;
        }
    }
    Ok(argmax(&score))
}

/// Index of the largest entry; the first one on ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

/// Encoder with rows drawn from a symmetric Dirichlet(1).
pub fn random_encoder(nx: usize, nt: usize, seed: u64) -> Encoder {
    let mut rng = rng::seeded(seed);
    let mut probs = Vec::with_capacity(nx * nt);
    for _ in 0..nx {
        let row: Vec<f64> = (0..nt).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let z: f64 = row.iter().sum();
        probs.extend(row.iter().map(|v| v / z));
    }
    Encoder::from_flat_unchecked(nx, nt, probs)
}

/// Runs the iteration from `init` until the largest encoder change drops
/// below `tol` or `max_iter` steps have been taken.
pub fn iterate(
    joint: &JointDistribution,
    cfg: &EibConfig,
    init: Encoder,
    restart_index: usize,
) -> Result<(SolveState, SolveTrace)> {
    cfg.validate()?;
    let mut state = SolveState::from_encoder(joint, init)?;
    let mut rows = vec![TraceRow { iter: 0, f_eib: free_energy(&state, joint, cfg), max_delta: None }];
    let mut converged = false;
    for iter in 1..=cfg.max_iter {
        let next = step(&state, joint, cfg)?;
        let delta = next.encoder.max_abs_diff(&state.encoder);
        state = next;
        rows.push(TraceRow { iter, f_eib: free_energy(&state, joint, cfg), max_delta: Some(delta) });
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok((state, SolveTrace { rows, converged, restart_index }))
}

/// Best of `n_restarts` runs from seeded random encoders, ranked by the
/// objective `l_eib`. Restarts run in parallel; the result does not depend on
/// scheduling.
pub fn solve_eib(joint: &JointDistribution, cfg: &EibConfig) -> Result<(SolveState, SolveTrace, InfoSummary)> {
    cfg.validate()?;
    let runs: Vec<Result<(SolveState, SolveTrace, InfoSummary)>> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| {
            let init = random_encoder(joint.nx(), cfg.t_cardinality, rng::derive_seed(cfg.seed, &[r as u64]));
            let (state, trace) = iterate(joint, cfg, init, r)?;
            let summary = info_summary(&state, joint, cfg);
            Ok((state, trace, summary))
        })
        .collect();
    let mut best: Option<(SolveState, SolveTrace, InfoSummary)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.2.l_eib < b.2.l_eib) {
            best = Some(run);
        }
    }
    let (mut state, trace, summary) = best.expect("at least one restart");
    state.encoder.set_x_labels(joint.x_labels().to_vec())?;
    Ok((state, trace, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint_423() -> JointDistribution {
        JointDistribution::new(vec![
            vec![0.10, 0.05, 0.05],
            vec![0.02, 0.20, 0.03],
            vec![0.15, 0.05, 0.05],
            vec![0.05, 0.05, 0.20],
        ])
        .unwrap()
    }

    fn cfg(alpha: f64, beta: f64, nt: usize) -> EibConfig {
        EibConfig { alpha, beta, t_cardinality: nt, ..EibConfig::default() }
    }

    #[test]
    fn single_cluster_is_a_fixed_point() {
        let j = joint_423();
        let enc = Encoder::deterministic(&[0, 0, 0, 0], 3).unwrap();
        let s = SolveState::from_encoder(&j, enc).unwrap();
        let next = eib_update_step(&s, &j, &cfg(0.5, 3.0, 3)).unwrap();
        assert_eq!(next, s);
        let next = dib_assignment_step(&s, &j, &cfg(0.0, 3.0, 3)).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn one_step_does_not_raise_free_energy() {
        let j = joint_423();
        let c = cfg(0.6, 2.0, 2);
        let s = SolveState::from_encoder(&j, random_encoder(4, 2, 11)).unwrap();
        let next = eib_update_step(&s, &j, &c).unwrap();
        assert!(free_energy(&next, &j, &c) <= free_energy(&s, &j, &c) + 1e-12);
    }

    #[test]
    fn assignment_step_picks_unique_maximizer_and_breaks_ties_low() {
        // two clusters with identical decoders and marginals tie everywhere
        let j = JointDistribution::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let enc = Encoder::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = SolveState::from_encoder(&j, enc).unwrap();
        let next = dib_assignment_step(&s, &j, &cfg(0.0, 1.0, 2)).unwrap();
        assert_eq!(next.encoder.rows(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);

        let j = JointDistribution::new(vec![vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        let enc = Encoder::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let s = SolveState::from_encoder(&j, enc).unwrap();
        let next = dib_assignment_step(&s, &j, &cfg(0.0, 5.0, 2)).unwrap();
        assert_eq!(next.encoder.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn steps_enforce_their_alpha_range() {
        let j = joint_423();
        let s = SolveState::from_encoder(&j, random_encoder(4, 2, 1)).unwrap();
        assert!(eib_update_step(&s, &j, &cfg(0.0, 1.0, 2)).is_err());
        assert!(dib_assignment_step(&s, &j, &cfg(0.5, 1.0, 2)).is_err());
    }

    #[test]
    fn free_energy_of_single_cluster_at_alpha_one() {
        let j = joint_423();
        let s = SolveState::from_encoder(&j, Encoder::deterministic(&[1, 1, 1, 1], 2).unwrap()).unwrap();
        let f = free_energy(&s, &j, &cfg(1.0, 2.5, 2));
        assert!((f - 2.5 * prob::mutual_information(&j)).abs() < 1e-14);
    }

    #[test]
    fn free_energy_distortion_vanishes_for_invertible_encoder() {
        let j = joint_423();
        let s = SolveState::from_encoder(&j, Encoder::deterministic(&[3, 1, 0, 2], 4).unwrap()).unwrap();
        let f_b1 = free_energy(&s, &j, &cfg(0.3, 1.0, 4));
        let f_b9 = free_energy(&s, &j, &cfg(0.3, 9.0, 4));
        assert!((f_b1 - f_b9).abs() < 1e-14);
    }

    #[test]
    fn summary_of_simple_states() {
        let j = joint_423();
        let c = cfg(0.5, 2.0, 2);
        let one = SolveState::from_encoder(&j, Encoder::deterministic(&[0; 4], 2).unwrap()).unwrap();
        let s = info_summary(&one, &j, &c);
        assert_eq!((s.h_t, s.i_xt, s.i_yt, s.h_t_given_x), (0.0, 0.0, 0.0, 0.0));

        let uni = JointDistribution::new(vec![vec![0.125, 0.125]; 4]).unwrap();
        let inv = SolveState::from_encoder(&uni, Encoder::deterministic(&[0, 1, 2, 3], 4).unwrap()).unwrap();
        let s = info_summary(&inv, &uni, &c);
        assert!((s.h_t - 4f64.ln()).abs() < 1e-15);
        assert_eq!(s.h_t_given_x, 0.0);
    }

    #[test]
    fn classify_examples() {
        let j = joint_423();
        let inv = SolveState::from_encoder(&j, Encoder::deterministic(&[0, 1, 2, 3], 4).unwrap()).unwrap();
        let expected = [0, 1, 0, 2];
        for (x, &y) in expected.iter().enumerate() {
            assert_eq!(classify(&inv, x).unwrap(), y);
        }
        let one = SolveState::from_encoder(&j, Encoder::deterministic(&[0; 4], 1).unwrap()).unwrap();
        let majority = argmax(&j.marginal_y());
        for x in 0..4 {
            assert_eq!(classify(&one, x).unwrap(), majority);
        }
        assert!(matches!(classify(&one, 4), Err(Error::UnknownInstance { index: 4, size: 4 })));
    }

    #[test]
    fn trace_csv_layout() {
        let j = joint_423();
        let (_, trace) = iterate(&j, &cfg(1.0, 2.0, 2), random_encoder(4, 2, 5), 0).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iter,f_eib,max_delta"));
        assert!(lines.next().unwrap().starts_with("0,") && csv.lines().nth(1).unwrap().ends_with(','));
        assert_eq!(csv.lines().count(), trace.rows.len() + 1);
    }

    #[test]
    fn config_rejects_out_of_range_values() {
        assert!(cfg(1.5, 1.0, 2).validate().is_err());
        assert!(cfg(0.5, 0.0, 2).validate().is_err());
        assert!(cfg(0.5, 1.0, 0).validate().is_err());
        assert!(EibConfig { tol: 0.0, ..EibConfig::default() }.validate().is_err());
        assert!(EibConfig::default().validate().is_ok());
    }
}
