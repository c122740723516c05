//! Diagonal Gaussian representations: L1 discrepancy formulas, the
//! correspondence-pair bound and the closed-form variational regularizer.
//!
//! [`l1_shared_cov`] evaluates the product formula
//! `∏ᵢ (4Φ(|μ₁ᵢ − μ₂ᵢ|/(2σᵢ)) − 2)` exactly as stated. It equals the L1
//! distance between the two densities in one dimension. For `d > 1` it does
//! not: it vanishes as soon as a single coordinate agrees and can exceed 2.
//! [`l1_monte_carlo`] estimates the true L1 distance and is the reference to
//! compare against.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::fmt;
use crate::rng;

const VAR_TOL: f64 = 1e-12;

/// A Gaussian with diagonal covariance, stored as means and variances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussian")]
pub struct DiagGaussian {
    mean: Vec<f64>,
    var: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGaussian {
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl TryFrom<RawGaussian> for DiagGaussian {
    type Error = Error;

    fn try_from(raw: RawGaussian) -> Result<Self> {
        Self::new(raw.mean, raw.var)
    }
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if mean.len() != var.len() {
            return Err(Error::LengthMismatch { left: mean.len(), right: var.len() });
        }
        if let Some(i) = mean.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if let Some(i) = var.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("variance {} at index {i} must be positive", var[i])));
        }
        Ok(Self { mean, var })
    }

    /// Same variance `var` in every coordinate.
    pub fn isotropic(mean: Vec<f64>, var: f64) -> Result<Self> {
        let v = vec![var; mean.len()];
        Self::new(mean, v)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    /// The same means with every variance multiplied by `factor`.
    pub fn scale_var(&self, factor: f64) -> Result<Self> {
        Self::new(self.mean.clone(), self.var.iter().map(|v| v * factor).collect())
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.var)
            .zip(z)
            .map(|((m, v), x)| -0.5 * ((2.0 * PI * v).ln() + (x - m).powi(2) / v))
            .sum()
    }

    fn sample_into(&self, rng: &mut rng::Rng, out: &mut [f64]) {
        for ((o, m), v) in out.iter_mut().zip(&self.mean).zip(&self.var) {
            let z: f64 = rng.sample(StandardNormal);
            *o = m + v.sqrt() * z;
        }
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

fn same_dim(a: &DiagGaussian, b: &DiagGaussian) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("dimensions {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `∏ᵢ (4Φ(|μ₁ᵢ − μ₂ᵢ|/(2σᵢ)) − 2)` for Gaussians sharing their variances.
pub fn l1_shared_cov(g1: &DiagGaussian, g2: &DiagGaussian) -> Result<f64> {
    same_dim(g1, g2)?;
    let mut acc = 1.0;
    for i in 0..g1.dim() {
        let (v1, v2) = (g1.var[i], g2.var[i]);
        if (v1 - v2).abs() > VAR_TOL {
            return Err(Error::CovarianceMismatch { dim: i, left: v1, right: v2 });
        }
        let z = (g1.mean[i] - g2.mean[i]).abs() / (2.0 * v1.sqrt());
        acc *= (4.0 * std_normal_cdf(z) - 2.0).max(0.0);
    }
    Ok(acc)
}

/// Mean and standard error of a stream of samples.
#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> (f64, f64) {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        (self.mean, (var / self.n).sqrt())
    }
}

/// Importance-sampling estimate of `∫|p₁ − p₂|` with proposal `(p₁ + p₂)/2`.
/// Returns `(estimate, standard error)`.
pub fn l1_monte_carlo(g1: &DiagGaussian, g2: &DiagGaussian, n: usize, seed: u64) -> Result<(f64, f64)> {
    same_dim(g1, g2)?;
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {n}")));
    }
    let mut rng = rng::seeded(seed);
    let mut z = vec![0.0; g1.dim()];
    let mut acc = Moments::default();
    for _ in 0..n {
        if rng.gen::<bool>() {
            g1.sample_into(&mut rng, &mut z);
        } else {
            g2.sample_into(&mut rng, &mut z);
        }
        let diff = g1.log_density(&z) - g2.log_density(&z);
        // |p₁ − p₂| / ((p₁ + p₂)/2)
        acc.push(2.0 * (0.5 * diff).tanh().abs());
    }
    Ok(acc.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    /// `(source index, target index)`, sorted by source index.
    pub pairs: Vec<(usize, usize)>,
    /// Cost of each pair, aligned with `pairs`.
    pub costs: Vec<f64>,
    pub total_l1: f64,
    /// Slack term of the correspondence-pair bound, when computed.
    pub epsilon: Option<f64>,
}

impl PairingResult {
    pub const CSV_HEADER: &'static str = "src_idx,tgt_idx,l1";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (&(s, t), &c) in self.pairs.iter().zip(&self.costs) {
            out.push_str(&format!("{s},{t},{}\n", fmt::float(c)));
        }
        out
    }
}

/// Minimum total [`l1_shared_cov`] bijection between two equally long lists,
/// lexicographically smallest among ties.
pub fn optimal_pairing(source: &[DiagGaussian], target: &[DiagGaussian]) -> Result<PairingResult> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch { left: source.len(), right: target.len() });
    }
    let n = source.len();
    if n > assignment::MAX_ASSIGNMENT_SIZE {
        return Err(Error::AssignmentBudgetExceeded { size: n, max: assignment::MAX_ASSIGNMENT_SIZE });
    }
    let mut cost = Vec::with_capacity(n * n);
    for s in source {
        for t in target {
            cost.push(l1_shared_cov(s, t)?);
        }
    }
    let (perm, _) = assignment::min_cost_assignment(&cost, n)?;
    let costs: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    Ok(PairingResult {
        pairs: perm.into_iter().enumerate().collect(),
        total_l1: costs.iter().sum(),
        costs,
        epsilon: None,
    })
}

/// `2√|T|·(2 + √(2·ln(1/δ)))/√m`.
pub fn prop1_epsilon(t_card: usize, m: usize, delta: f64) -> Result<f64> {
    if t_card == 0 || m == 0 {
        return Err(Error::InvalidArgument("|T| and m must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(2.0 * (t_card as f64).sqrt() * (2.0 + (2.0 * (1.0 / delta).ln()).sqrt()) / (m as f64).sqrt())
}

/// Optimal pairing together with the bound's slack term.
pub fn prop1_pairing(source: &[DiagGaussian], target: &[DiagGaussian], t_card: usize, delta: f64) -> Result<PairingResult> {
    let mut res = optimal_pairing(source, target)?;
    res.epsilon = Some(prop1_epsilon(t_card, source.len(), delta)?);
    Ok(res)
}

/// `(1/m)·Σ_{optimal pairs} ‖p(t|x_S) − p(t|x_T)‖₁ + ε` with `m` the list
/// length. `t_card` is the representation cardinality entering `ε`; it must
/// be supplied because continuous representations do not define one.
pub fn prop1_bound(source: &[DiagGaussian], target: &[DiagGaussian], t_card: usize, delta: f64) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::InvalidArgument("no representations".into()));
    }
    let res = prop1_pairing(source, target, t_card, delta)?;
    Ok(res.total_l1 / source.len() as f64 + res.epsilon.unwrap_or(0.0))
}

/// Group-averaged correspondence bound:
/// `(1/n)·Σᵢ (1/(|G_S,i|·|G_T,i|))·Σ_{a ∈ G_S,i, b ∈ G_T,i} ‖a − b‖₁ + ε`.
pub fn group_rd_bound(source_groups: &[Vec<DiagGaussian>], target_groups: &[Vec<DiagGaussian>], epsilon: f64) -> Result<f64> {
    if source_groups.len() != target_groups.len() {
        return Err(Error::LengthMismatch { left: source_groups.len(), right: target_groups.len() });
    }
    if source_groups.is_empty() {
        return Err(Error::InvalidArgument("no groups".into()));
    }
    let mut acc = 0.0;
    for (i, (gs, gt)) in source_groups.iter().zip(target_groups).enumerate() {
        if gs.is_empty() || gt.is_empty() {
            return Err(Error::EmptyGroup(i));
        }
        let mut sum = 0.0;
        for a in gs {
            for b in gt {
                sum += l1_shared_cov(a, b)?;
            }
        }
        acc += sum / (gs.len() * gt.len()) as f64;
    }
    Ok(acc / source_groups.len() as f64 + epsilon)
}

/// Closed form of `∫ p(t)·ln(p(t)^α / b(t)) dt` for diagonal Gaussians `p`
/// (encoder) and `b` (backward encoder):
///
/// ```text
/// Σⱼ (1−α)/2·ln 2π − α·ln σ₁ⱼ + ln σ₂ⱼ − α/2 + ((μ₁ⱼ − μ₂ⱼ)² + σ₁ⱼ²)/(2σ₂ⱼ²)
/// ```
///
/// At `α = 1` this is `D_KL[p ‖ b]`; at `α = 0` the cross entropy `H(p, b)`.
pub fn eib_var_regularizer(p_enc: &DiagGaussian, b_enc: &DiagGaussian, alpha: f64) -> Result<f64> {
    same_dim(p_enc, b_enc)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut acc = 0.0;
    for j in 0..p_enc.dim() {
        let (m1, v1) = (p_enc.mean[j], p_enc.var[j]);
        let (m2, v2) = (b_enc.mean[j], b_enc.var[j]);
        acc += (1.0 - alpha) * half_ln_2pi - 0.5 * alpha * v1.ln() + 0.5 * v2.ln() - 0.5 * alpha
            + (m1 * m1 + m2 * m2 - 2.0 * m1 * m2 + v1) / (2.0 * v2);
    }
    Ok(acc)
}

/// Monte-Carlo estimate of `E_{t∼p}[α·ln p(t) − ln b(t)]` with its standard
/// error.
pub fn eib_var_regularizer_monte_carlo(
    p_enc: &DiagGaussian,
    b_enc: &DiagGaussian,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    same_dim(p_enc, b_enc)?;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut z = vec![0.0; p_enc.dim()];
    let mut acc = Moments::default();
    for _ in 0..n {
        p_enc.sample_into(&mut rng, &mut z);
        acc.push(alpha * p_enc.log_density(&z) - b_enc.log_density(&z));
    }
    Ok(acc.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossItem {
    pub p_enc: DiagGaussian,
    pub b_enc: DiagGaussian,
    pub ce_term: f64,
}

/// Batch mean of `regularizer + β·cross_entropy`.
pub fn var_loss(batch: &[LossItem], alpha: f64, beta: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    let mut acc = 0.0;
    for item in batch {
        if !(item.ce_term >= 0.0) {
            return Err(Error::InvalidArgument(format!("cross entropy {} must be non-negative", item.ce_term)));
        }
        acc += eib_var_regularizer(&item.p_enc, &item.b_enc, alpha)? + beta * item.ce_term;
    }
    Ok(acc / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mean: &[f64], var: &[f64]) -> DiagGaussian {
        DiagGaussian::new(mean.to_vec(), var.to_vec()).unwrap()
    }

    #[test]
    fn l1_examples() {
        let a = g(&[0.3, -1.0], &[0.5, 2.0]);
        assert_eq!(l1_shared_cov(&a, &a).unwrap(), 0.0);
        // mpmath: 4Φ(1) − 2
        let one = l1_shared_cov(&g(&[0.0], &[0.25]), &g(&[1.0], &[0.25])).unwrap();
        assert!((one - 1.365_378_984_274_171_8).abs() < 1e-14);
        let sharp = l1_shared_cov(&g(&[0.0], &[1e-12]), &g(&[1.0], &[1e-12])).unwrap();
        assert_eq!(sharp, 2.0);
        assert!(matches!(
            l1_shared_cov(&g(&[0.0], &[1.0]), &g(&[0.0], &[1.1])),
            Err(Error::CovarianceMismatch { dim: 0, .. })
        ));
    }

    #[test]
    fn monte_carlo_identical_is_zero() {
        let a = g(&[1.0, 2.0], &[1.0, 3.0]);
        let (est, se) = l1_monte_carlo(&a, &a, 2000, 1).unwrap();
        assert_eq!((est, se), (0.0, 0.0));
        assert!(l1_monte_carlo(&a, &a, 999, 1).is_err());
    }

    #[test]
    fn pairing_examples() {
        let s = vec![g(&[0.0], &[1.0])];
        assert_eq!(optimal_pairing(&s, &s).unwrap().pairs, vec![(0, 0)]);
        let far = vec![g(&[0.0], &[1e-6]), g(&[100.0], &[1e-6])];
        let swapped = vec![far[1].clone(), far[0].clone()];
        let p = optimal_pairing(&far, &swapped).unwrap();
        assert_eq!(p.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(p.total_l1, 0.0);
        assert_eq!(p.to_csv(), "src_idx,tgt_idx,l1\n0,1,0\n1,0,0\n");
        assert!(matches!(optimal_pairing(&s, &far), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn prop1_examples() {
        let s = vec![g(&[0.0, 1.0], &[1.0, 1.0]), g(&[2.0, 0.0], &[1.0, 1.0])];
        let eps = prop1_epsilon(4, 2, 0.1).unwrap();
        assert_eq!(prop1_bound(&s, &s, 4, 0.1).unwrap(), eps);
        let one = prop1_bound(&[g(&[0.0], &[0.25])], &[g(&[1.0], &[0.25])], 2, 0.1).unwrap();
        assert!((one - 1.365_378_984_274_171_8 - prop1_epsilon(2, 1, 0.1).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn group_bound_reduces_to_pairs_for_singletons() {
        let s = [g(&[0.0], &[1.0]), g(&[0.5], &[1.0])];
        let t = [g(&[1.0], &[1.0]), g(&[0.0], &[1.0])];
        let groups_s: Vec<_> = s.iter().map(|x| vec![x.clone()]).collect();
        let groups_t: Vec<_> = t.iter().map(|x| vec![x.clone()]).collect();
        let direct = (l1_shared_cov(&s[0], &t[0]).unwrap() + l1_shared_cov(&s[1], &t[1]).unwrap()) / 2.0;
        assert!((group_rd_bound(&groups_s, &groups_t, 0.3).unwrap() - direct - 0.3).abs() < 1e-15);
        assert_eq!(group_rd_bound(&groups_s, &groups_s, 0.3).unwrap(), 0.3);
        assert!(matches!(group_rd_bound(&[vec![]], &[vec![s[0].clone()]], 0.0), Err(Error::EmptyGroup(0))));
    }

    #[test]
    fn regularizer_examples() {
        let a = g(&[0.4, -1.2], &[0.7, 2.5]);
        assert!(eib_var_regularizer(&a, &a, 1.0).unwrap().abs() < 1e-15);
        // differential entropy of N(μ, 2.89)
        let b = g(&[0.3], &[1.7 * 1.7]);
        let h = eib_var_regularizer(&b, &b, 0.0).unwrap();
        assert!((h - 1.949_566_784_266_843).abs() < 1e-14);
    }

    #[test]
    fn loss_examples() {
        let a = g(&[0.0], &[1.0]);
        let b = g(&[1.0], &[2.0]);
        let item = LossItem { p_enc: a.clone(), b_enc: b.clone(), ce_term: 0.4 };
        let single = var_loss(&[item], 0.3, 2.0).unwrap();
        assert_eq!(single, eib_var_regularizer(&a, &b, 0.3).unwrap() + 2.0 * 0.4);
        let same = LossItem { p_enc: a.clone(), b_enc: a.clone(), ce_term: 0.0 };
        assert!(var_loss(&[same.clone(), same], 1.0, 3.0).unwrap().abs() < 1e-15);
        assert!(matches!(var_loss(&[], 0.5, 1.0), Err(Error::EmptyBatch)));
    }

    #[test]
    fn json_shape() {
        let a: DiagGaussian = serde_json::from_str(r#"{"mean":[1.0,2.0],"var":[0.5,0.25]}"#).unwrap();
        assert_eq!(a.var(), &[0.5, 0.25]);
        assert!(serde_json::from_str::<DiagGaussian>(r#"{"mean":[1.0],"var":[0.0]}"#).is_err());
    }
}
