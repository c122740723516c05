//! Noisy-prototype binary classification data.
//!
//! Label 0 has prototype `1…10…0` (first half of the bits set), label 1 has
//! `0…01…1`. Each example starts from its label's prototype and receives
//! `⌊N⌋` flip operations with `N ∼ U[0, R]`; every flip picks a bit uniformly
//! at random, with replacement, so two flips may cancel.
//!
//! Instances are stored as integers with bit `b0` as the most significant of
//! the `n_bits` used.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::JointDistribution;
use crate::rng;
use crate::solver::{self, SolveState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub r: f64,
    pub m: usize,
    pub seed: u64,
    #[serde(default = "default_bits")]
    pub n_bits: usize,
}

fn default_bits() -> usize {
    10
}

impl ToyConfig {
    pub fn new(r: f64, m: usize, seed: u64) -> Self {
        Self { r, m, seed, n_bits: default_bits() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise level r = {} must be non-negative", self.r)));
        }
        if self.m < 2 || !self.m.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("m = {} must be even and at least 2", self.m)));
        }
        if self.n_bits == 0 || !self.n_bits.is_multiple_of(2) || self.n_bits > 64 {
            return Err(Error::InvalidArgument(format!("n_bits = {} must be even and in 2..=64", self.n_bits)));
        }
        Ok(())
    }
}

/// Prototype of `label` on `n_bits` bits.
pub fn prototype(label: usize, n_bits: usize) -> u64 {
    let half = n_bits / 2;
    let low = if half == 64 { u64::MAX } else { (1u64 << half) - 1 };
    if label == 0 {
        low << (n_bits - half)
    } else {
        low
    }
}

/// Label of the closer prototype by Hamming distance; label 0 on ties.
pub fn nearest_prototype(x: u64, n_bits: usize) -> usize {
    let d0 = (x ^ prototype(0, n_bits)).count_ones();
    let d1 = (x ^ prototype(1, n_bits)).count_ones();
    usize::from(d1 < d0)
}

/// `n_bits` characters, `b0` first.
pub fn bit_string(x: u64, n_bits: usize) -> String {
    (0..n_bits).map(|i| if x >> (n_bits - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyDataset {
    pub n_bits: usize,
    pub instances: Vec<u64>,
    pub labels: Vec<usize>,
}

impl ToyDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// One row per example: `b0,…,b{n−1},label`.
    pub fn to_csv(&self) -> String {
        let mut out: Vec<String> = (0..self.n_bits).map(|i| format!("b{i}")).collect();
        out.push("label".into());
        let mut text = out.join(",");
        text.push('\n');
        for (&x, &y) in self.instances.iter().zip(&self.labels) {
            for c in bit_string(x, self.n_bits).chars() {
                text.push(c);
                text.push(',');
            }
            text.push_str(&format!("{y}\n"));
        }
        text
    }

    /// Mean Hamming distance from each instance to its label's prototype.
    pub fn mean_corruption(&self) -> f64 {
        let total: u64 = self
            .instances
            .iter()
            .zip(&self.labels)
            .map(|(&x, &y)| u64::from((x ^ prototype(y, self.n_bits)).count_ones()))
            .sum();
        total as f64 / self.len() as f64
    }
}

pub fn generate(cfg: &ToyConfig) -> Result<ToyDataset> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let half = cfg.m / 2;
    let mut examples = Vec::with_capacity(cfg.m);
    for i in 0..cfg.m {
        let label = usize::from(i >= half);
        let mut x = prototype(label, cfg.n_bits);
        let flips = (rng.gen::<f64>() * cfg.r).floor() as usize;
        for _ in 0..flips {
            let bit = rng.gen_range(0..cfg.n_bits);
            x ^= 1u64 << bit;
        }
        examples.push((x, label));
    }
    examples.shuffle(&mut rng);
    let (instances, labels) = examples.into_iter().unzip();
    Ok(ToyDataset { n_bits: cfg.n_bits, instances, labels })
}

/// Empirical joint over the distinct instances (ascending integer value,
/// labelled by their bit strings) and the two labels. Also returns the
/// instance alphabet in row order.
pub fn to_empirical_joint(data: &ToyDataset) -> Result<(JointDistribution, Vec<u64>)> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let mut alphabet = data.instances.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mut counts = vec![0u64; alphabet.len() * 2];
    for (&x, &y) in data.instances.iter().zip(&data.labels) {
        let row = alphabet.binary_search(&x).expect("alphabet holds every instance");
        counts[row * 2 + y] += 1;
    }
    let m = data.len() as f64;
    let joint = JointDistribution::from_flat_labeled(
        alphabet.iter().map(|&x| bit_string(x, data.n_bits)).collect(),
        vec!["0".into(), "1".into()],
        alphabet.len(),
        2,
        counts.iter().map(|&c| c as f64 / m).collect(),
    )?;
    Ok((joint, alphabet))
}

/// Fraction of examples labelled correctly. `predict` returns `None` for
/// instances it has no opinion on; those fall back to the nearest prototype.
pub fn accuracy(data: &ToyDataset, predict: impl Fn(u64) -> Option<usize>) -> f64 {
    accuracy_with_fallback(data, predict, |x| nearest_prototype(x, data.n_bits))
}

pub fn accuracy_with_fallback(
    data: &ToyDataset,
    predict: impl Fn(u64) -> Option<usize>,
    fallback: impl Fn(u64) -> usize,
) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .instances
        .iter()
        .zip(&data.labels)
        .filter(|(&x, &y)| predict(x).unwrap_or_else(|| fallback(x)) == y)
        .count();
    hits as f64 / data.len() as f64
}

/// Predictor backed by a solved state over `alphabet`; unseen instances give
/// `None`.
pub fn solver_predictor<'a>(alphabet: &'a [u64], state: &'a SolveState) -> impl Fn(u64) -> Option<usize> + 'a {
    move |x| {
        let row = alphabet.binary_search(&x).ok()?;
        solver::classify(state, row).ok()
    }
}

/// Bayes rule `argmax_y p(y|x)` of a joint over `alphabet`, ties to label 0.
pub fn bayes_predictor<'a>(alphabet: &'a [u64], joint: &'a JointDistribution) -> impl Fn(u64) -> Option<usize> + 'a {
    move |x| {
        let row = alphabet.binary_search(&x).ok()?;
        Some(solver::argmax(joint.row(row)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototypes_match_layout() {
        assert_eq!(bit_string(prototype(0, 10), 10), "1111100000");
        assert_eq!(bit_string(prototype(1, 10), 10), "0000011111");
        assert_eq!(nearest_prototype(prototype(1, 10), 10), 1);
        assert_eq!(nearest_prototype(0, 10), 0);
    }

    #[test]
    fn low_noise_leaves_prototypes() {
        let d = generate(&ToyConfig::new(0.5, 20, 3)).unwrap();
        for (&x, &y) in d.instances.iter().zip(&d.labels) {
            assert_eq!(x, prototype(y, 10));
        }
        let (j, alphabet) = to_empirical_joint(&d).unwrap();
        assert_eq!(alphabet, vec![prototype(1, 10), prototype(0, 10)]);
        assert_eq!(j.rows(), vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert_eq!(j.x_labels(), &["0000011111", "1111100000"]);
    }

    #[test]
    fn duplicates_merge() {
        let d = ToyDataset { n_bits: 4, instances: vec![3, 3, 12, 5], labels: vec![1, 1, 0, 0] };
        let (j, alphabet) = to_empirical_joint(&d).unwrap();
        assert_eq!(alphabet, vec![3, 5, 12]);
        assert_eq!(j.rows(), vec![vec![0.0, 0.5], vec![0.25, 0.0], vec![0.25, 0.0]]);
    }

    #[test]
    fn accuracy_examples() {
        let d = generate(&ToyConfig::new(3.0, 200, 1)).unwrap();
        let truth: std::collections::HashMap<u64, usize> = d.instances.iter().copied().zip(d.labels.iter().copied()).collect();
        // ground truth is only well defined where instances are unambiguous
        let consistent = d.instances.iter().zip(&d.labels).all(|(x, y)| truth[x] == *y);
        if consistent {
            assert_eq!(accuracy(&d, |x| truth.get(&x).copied()), 1.0);
        }
        assert_eq!(accuracy(&d, |_| Some(0)), 0.5);
    }

    #[test]
    fn csv_layout() {
        let d = ToyDataset { n_bits: 4, instances: vec![0b1000], labels: vec![1] };
        assert_eq!(d.to_csv(), "b0,b1,b2,b3,label\n1,0,0,0,1\n");
    }

    #[test]
    fn config_validation() {
        assert!(ToyConfig::new(1.0, 3, 0).validate().is_err());
        assert!(ToyConfig::new(-1.0, 4, 0).validate().is_err());
        assert!(ToyConfig { n_bits: 5, ..ToyConfig::new(1.0, 4, 0) }.validate().is_err());
    }
}
