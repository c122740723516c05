//! Exact finite-alphabet probability kernels.
//!
//! All quantities are in nats. `0 · ln 0` is taken as 0 everywhere.
//!
//! Tables are validated on construction: entries must be finite and
//! non-negative (values in `[-1e-12, 0)` are clamped to zero) and must sum to
//! one within [`NORM_TOL`]. A sum that is off by more than that but less than
//! [`RENORM_TOL`] is renormalized; anything further is rejected.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const NORM_TOL: f64 = 1e-12;
pub const RENORM_TOL: f64 = 1e-9;
const NEG_TOL: f64 = 1e-12;

/// Validates `values` as a probability vector, clamping tiny negatives and
/// renormalizing small drift in place. `base` offsets reported indices.
fn normalize_in_place(values: &mut [f64], base: usize) -> Result<()> {
    let mut sum = 0.0;
    for (i, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index: base + i });
        }
        if *v < 0.0 {
            if *v < -NEG_TOL {
                return Err(Error::NegativeEntry { index: base + i, value: *v });
            }
            *v = 0.0;
        }
        sum += *v;
    }
    let dev = (sum - 1.0).abs();
    if dev > RENORM_TOL {
        return Err(Error::NotNormalized { sum });
    }
    if dev > NORM_TOL {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// Returns a validated copy of `p`.
pub fn validate_distribution(p: &[f64]) -> Result<Vec<f64>> {
    let mut out = p.to_vec();
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    normalize_in_place(&mut out, 0)?;
    Ok(out)
}

#[inline]
pub(crate) fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Entropy of an already valid vector.
pub(crate) fn entropy_raw(p: &[f64]) -> f64 {
    let h = -p.iter().map(|&v| xlogx(v)).sum::<f64>();
    h.max(0.0)
}

/// Shannon entropy `−Σ p ln p`, clamped into `[0, ln len]`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    let p = validate_distribution(p)?;
    let upper = (p.len() as f64).ln();
    Ok(entropy_raw(&p).min(upper))
}

/// KL divergence of already valid vectors; `+∞` on support violation.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    acc.max(0.0)
}

/// `D_KL[p ‖ q]` in nats.
///
/// When `p` puts mass where `q` has none the divergence is `+∞`; this is
/// returned as a value rather than an error, since the solver feeds it into
/// `exp(−β·D)` where it correctly produces zero weight.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    let p = validate_distribution(p)?;
    let q = validate_distribution(q)?;
    Ok(kl_raw(&p, &q))
}

/// The φ function of the plug-in estimation lemmas: `0` at 0, `x ln(1/x)` up
/// to `1/e`, and flat at `1/e` afterwards. Continuous, non-decreasing and
/// concave on `[0, 1]`.
pub fn phi(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(x));
    }
    let inv_e = (-1.0f64).exp();
    Ok(if x == 0.0 {
        0.0
    } else if x <= inv_e {
        -x * x.ln()
    } else {
        inv_e
    })
}

/// Mutual information of a row-major `rows × cols` table that is already a
/// valid joint distribution.
pub(crate) fn mutual_information_raw(probs: &[f64], rows: usize, cols: usize) -> f64 {
    let mut row_m = vec![0.0; rows];
    let mut col_m = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = probs[r * cols + c];
            row_m[r] += v;
            col_m[c] += v;
        }
    }
    let mut acc = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let v = probs[r * cols + c];
            if v > 0.0 {
                acc += v * (v / (row_m[r] * col_m[c])).ln();
            }
        }
    }
    if (-1e-10..0.0).contains(&acc) {
        0.0
    } else {
        acc
    }
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelRepr {
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

fn de_labels<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    let raw = Vec::<LabelRepr>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|l| match l {
            LabelRepr::Text(s) => s,
            LabelRepr::Int(i) => i.to_string(),
            LabelRepr::Float(f) => f.to_string(),
            LabelRepr::Bool(b) => b.to_string(),
        })
        .collect())
}

/// Wire format shared by [`JointDistribution`] and [`Encoder`].
#[derive(Serialize, Deserialize)]
struct RawTable {
    #[serde(default, deserialize_with = "de_labels")]
    x_labels: Vec<String>,
    #[serde(default, deserialize_with = "de_labels")]
    y_labels: Vec<String>,
    probs: Vec<Vec<f64>>,
}

fn flatten_rows(rows: &[Vec<f64>]) -> Result<(usize, usize, Vec<f64>)> {
    let nr = rows.len();
    if nr == 0 {
        return Err(Error::InvalidArgument("table has no rows".into()));
    }
    let nc = rows[0].len();
    if nc == 0 {
        return Err(Error::InvalidArgument("table has no columns".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch(format!(
            "ragged table: row of length {} where {} expected",
            bad.len(),
            nc
        )));
    }
    Ok((nr, nc, rows.concat()))
}

fn check_labels(labels: Vec<String>, n: usize, prefix: &str) -> Result<Vec<String>> {
    if labels.is_empty() {
        return Ok(default_labels(prefix, n));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} entries",
            labels.len(),
            n
        )));
    }
    Ok(labels)
}

fn to_rows(flat: &[f64], cols: usize) -> Vec<Vec<f64>> {
    flat.chunks(cols).map(|c| c.to_vec()).collect()
}

/// A joint distribution `p(x, y)` over a finite instance alphabet (rows) and
/// label alphabet (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct JointDistribution {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
}

impl TryFrom<RawTable> for JointDistribution {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        Self::with_labels(raw.x_labels, raw.y_labels, raw.probs)
    }
}

impl From<JointDistribution> for RawTable {
    fn from(j: JointDistribution) -> Self {
        RawTable { probs: j.rows(), x_labels: j.x_labels, y_labels: j.y_labels }
    }
}

impl JointDistribution {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_labels(Vec::new(), Vec::new(), rows)
    }

    /// Empty label vectors are replaced by `x0, x1, …` / `y0, y1, …`.
    pub fn with_labels(x_labels: Vec<String>, y_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let (nx, ny, probs) = flatten_rows(&rows)?;
        Self::from_flat_labeled(x_labels, y_labels, nx, ny, probs)
    }

    pub fn from_flat(nx: usize, ny: usize, probs: Vec<f64>) -> Result<Self> {
        Self::from_flat_labeled(Vec::new(), Vec::new(), nx, ny, probs)
    }

    pub fn from_flat_labeled(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        nx: usize,
        ny: usize,
        mut probs: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("joint needs |X| ≥ 1 and |Y| ≥ 1".into()));
        }
        if probs.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {nx}×{ny} table",
                probs.len()
            )));
        }
        normalize_in_place(&mut probs, 0)?;
        Ok(Self {
            x_labels: check_labels(x_labels, nx, "x")?,
            y_labels: check_labels(y_labels, ny, "y")?,
            nx,
            ny,
            probs,
        })
    }

    /// `p(x)·q(y)`.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        let px = validate_distribution(px)?;
        let py = validate_distribution(py)?;
        let probs = px.iter().flat_map(|a| py.iter().map(move |b| a * b)).collect();
        Self::from_flat(px.len(), py.len(), probs)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    /// Row-major entries.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.ny..(x + 1) * self.ny]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.probs, self.ny)
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx).map(|x| self.row(x).iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.ny];
        for x in 0..self.nx {
            for (acc, v) in py.iter_mut().zip(self.row(x)) {
                *acc += v;
            }
        }
        py
    }

    /// `p(y|x)`, or `None` when `p(x) = 0`.
    pub fn label_given_instance(&self, x: usize) -> Option<Vec<f64>> {
        let row = self.row(x);
        let px: f64 = row.iter().sum();
        (px > 0.0).then(|| row.iter().map(|v| v / px).collect())
    }

    /// `p(x|y)` as a column vector, or `None` when `p(y) = 0`.
    pub fn instance_given_label(&self, y: usize) -> Option<Vec<f64>> {
        let col: Vec<f64> = (0..self.nx).map(|x| self.prob(x, y)).collect();
        let py: f64 = col.iter().sum();
        (py > 0.0).then(|| col.iter().map(|v| v / py).collect())
    }

    /// The joint `p(t, y) = Σ_x p(t|x) p(x, y)` induced by an encoder.
    pub fn encode(&self, enc: &Encoder) -> Result<JointDistribution> {
        check_encoder(self, enc)?;
        let (nt, ny) = (enc.nt(), self.ny);
        let mut out = vec![0.0; nt * ny];
        for x in 0..self.nx {
            let row = self.row(x);
            for (t, &ptx) in enc.row(x).iter().enumerate() {
                if ptx == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    out[t * ny + y] += ptx * row[y];
                }
            }
        }
        JointDistribution::from_flat_labeled(enc.t_labels.clone(), self.y_labels.clone(), nt, ny, out)
    }

    /// Flattened entries, the distribution of the pair `(x, y)`.
    pub fn flattened(&self) -> Vec<f64> {
        self.probs.clone()
    }

    pub fn transpose(&self) -> JointDistribution {
        let mut out = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                out[y * self.nx + x] = self.prob(x, y);
            }
        }
        JointDistribution {
            x_labels: self.y_labels.clone(),
            y_labels: self.x_labels.clone(),
            nx: self.ny,
            ny: self.nx,
            probs: out,
        }
    }
}

/// `I(X;Y) = H(X) + H(Y) − H(X,Y)`, with tiny negative round-off clamped to 0.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let hx = entropy_raw(&joint.marginal_x());
    let hy = entropy_raw(&joint.marginal_y());
    let hxy = entropy_raw(joint.probs());
    let mi = hx + hy - hxy;
    if (-1e-10..0.0).contains(&mi) {
        0.0
    } else {
        mi
    }
}

/// A row-stochastic encoder `p(t|x)`.
///
/// Serialized with the same object shape as [`JointDistribution`]; the
/// `y_labels` key carries the representation symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct Encoder {
    x_labels: Vec<String>,
    t_labels: Vec<String>,
    nx: usize,
    nt: usize,
    probs: Vec<f64>,
}

impl TryFrom<RawTable> for Encoder {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        Self::with_labels(raw.x_labels, raw.y_labels, raw.probs)
    }
}

impl From<Encoder> for RawTable {
    fn from(e: Encoder) -> Self {
        RawTable { probs: e.rows(), x_labels: e.x_labels, y_labels: e.t_labels }
    }
}

impl Encoder {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_labels(Vec::new(), Vec::new(), rows)
    }

    pub fn with_labels(x_labels: Vec<String>, t_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let (nx, nt, probs) = flatten_rows(&rows)?;
        let mut enc = Self::from_flat(nx, nt, probs)?;
        enc.x_labels = check_labels(x_labels, nx, "x")?;
        enc.t_labels = check_labels(t_labels, nt, "t")?;
        Ok(enc)
    }

    pub fn from_flat(nx: usize, nt: usize, mut probs: Vec<f64>) -> Result<Self> {
        if nx == 0 || nt == 0 {
            return Err(Error::InvalidArgument("encoder needs |X| ≥ 1 and |T| ≥ 1".into()));
        }
        if probs.len() != nx * nt {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {nx}×{nt} encoder",
                probs.len()
            )));
        }
        for x in 0..nx {
            normalize_in_place(&mut probs[x * nt..(x + 1) * nt], x * nt)?;
        }
        Ok(Self::from_flat_unchecked(nx, nt, probs))
    }

    /// Rows are trusted to be probability vectors.
    pub(crate) fn from_flat_unchecked(nx: usize, nt: usize, probs: Vec<f64>) -> Self {
        Self {
            x_labels: default_labels("x", nx),
            t_labels: default_labels("t", nt),
            nx,
            nt,
            probs,
        }
    }

    /// The encoder sending instance `x` to `assignment[x]` with certainty.
    pub fn deterministic(assignment: &[usize], nt: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&t| t >= nt) {
            return Err(Error::InvalidArgument(format!("cluster {bad} outside |T| = {nt}")));
        }
        let mut probs = vec![0.0; assignment.len() * nt];
        for (x, &t) in assignment.iter().enumerate() {
            probs[x * nt + t] = 1.0;
        }
        Self::from_flat(assignment.len(), nt, probs)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn t_labels(&self) -> &[String] {
        &self.t_labels
    }

    pub fn set_x_labels(&mut self, labels: Vec<String>) -> Result<()> {
        self.x_labels = check_labels(labels, self.nx, "x")?;
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: usize, t: usize) -> f64 {
        self.probs[x * self.nt + t]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.nt..(x + 1) * self.nt]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.probs, self.nt)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Encoder) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A decoder `p(y|t)`. Rows of dead clusters (`p(t) = 0`) are all zero and
/// flagged in `live`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawDecoder")]
pub struct Decoder {
    nt: usize,
    ny: usize,
    probs: Vec<f64>,
    live: Vec<bool>,
}

#[derive(Serialize)]
struct RawDecoder {
    probs: Vec<Vec<f64>>,
    live: Vec<bool>,
}

impl From<Decoder> for RawDecoder {
    fn from(d: Decoder) -> Self {
        RawDecoder { probs: to_rows(&d.probs, d.ny), live: d.live }
    }
}

impl Decoder {
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.ny..(t + 1) * self.ny]
    }

    pub fn prob(&self, t: usize, y: usize) -> f64 {
        self.probs[t * self.ny + y]
    }

    pub fn is_live(&self, t: usize) -> bool {
        self.live[t]
    }

    pub fn live(&self) -> &[bool] {
        &self.live
    }

    pub fn dead_count(&self) -> usize {
        self.live.iter().filter(|l| !**l).count()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.probs, self.ny)
    }
}

fn check_encoder(joint: &JointDistribution, enc: &Encoder) -> Result<()> {
    if enc.nx() != joint.nx() {
        return Err(Error::DimensionMismatch(format!(
            "encoder has {} rows, joint has |X| = {}",
            enc.nx(),
            joint.nx()
        )));
    }
    Ok(())
}

/// `p(t) = Σ_x p(x) p(t|x)`.
pub fn induced_marginal(joint: &JointDistribution, enc: &Encoder) -> Result<Vec<f64>> {
    check_encoder(joint, enc)?;
    let px = joint.marginal_x();
    let mut pt = vec![0.0; enc.nt()];
    for (x, &w) in px.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (acc, v) in pt.iter_mut().zip(enc.row(x)) {
            *acc += w * v;
        }
    }
    Ok(pt)
}

/// `p(y|t) = Σ_x p(t|x) p(x,y) / p(t)`; clusters with `p(t) = 0` are marked
/// dead instead of failing.
///
/// Each cluster's weights `p(t|x)` are divided by their largest value first,
/// so a cluster holding only minute mass still gets an accurate decoder.
pub fn induced_decoder(joint: &JointDistribution, enc: &Encoder) -> Result<Decoder> {
    check_encoder(joint, enc)?;
    let (nx, nt, ny) = (joint.nx(), enc.nt(), joint.ny());
    let px = joint.marginal_x();
    let mut probs = vec![0.0; nt * ny];
    let mut live = vec![false; nt];
    for t in 0..nt {
        let scale = (0..nx).filter(|&x| px[x] > 0.0).map(|x| enc.prob(x, t)).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        let row = &mut probs[t * ny..(t + 1) * ny];
        for x in 0..nx {
            let w = enc.prob(x, t) / scale;
            if w == 0.0 {
                continue;
            }
            for (acc, &p) in row.iter_mut().zip(joint.row(x)) {
                *acc += w * p;
            }
        }
        let z: f64 = row.iter().sum();
        if z > 0.0 {
            live[t] = true;
            row.iter_mut().for_each(|v| *v /= z);
        }
    }
    Ok(Decoder { nt, ny, probs, live })
}

/// Integer counts of a sample of size `m` drawn from a joint distribution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDraw")]
pub struct EmpiricalDraw {
    counts: Vec<Vec<u64>>,
    m: u64,
}

#[derive(Deserialize)]
struct RawDraw {
    counts: Vec<Vec<u64>>,
    #[serde(default)]
    m: Option<u64>,
}

impl TryFrom<RawDraw> for EmpiricalDraw {
    type Error = Error;

    fn try_from(raw: RawDraw) -> Result<Self> {
        let draw = Self::from_counts(raw.counts)?;
        match raw.m {
            Some(m) if m != draw.m => Err(Error::InvalidArgument(format!(
                "counts sum to {} but m = {m}",
                draw.m
            ))),
            _ => Ok(draw),
        }
    }
}

impl EmpiricalDraw {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let nx = counts.len();
        let ny = counts.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("empty count table".into()));
        }
        if counts.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("ragged count table".into()));
        }
        let m: u64 = counts.iter().flatten().sum();
        if m == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        Ok(Self { counts, m })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn nx(&self) -> usize {
        self.counts.len()
    }

    pub fn ny(&self) -> usize {
        self.counts[0].len()
    }

    /// The empirical joint `p̂(x, y) = count / m`.
    pub fn empirical_joint(&self) -> JointDistribution {
        let m = self.m as f64;
        let probs = self.counts.iter().flatten().map(|&c| c as f64 / m).collect();
        JointDistribution::from_flat(self.nx(), self.ny(), probs)
            .expect("counts with positive total always form a distribution")
    }
}

/// Draws `m` i.i.d. pairs from `joint` and returns the cell counts.
///
/// The multinomial is sampled as a chain of conditional binomials, one per
/// cell, so the cost does not grow with `m`.
pub fn sample_empirical(joint: &JointDistribution, m: u64, seed: u64) -> Result<EmpiricalDraw> {
    if m == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let probs = joint.probs();
    let last_live = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("a normalized table has a positive entry");
    let mut flat = vec![0u64; probs.len()];
    let mut remaining = m;
    let mut mass_left = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last_live {
            flat[i] = remaining;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("binomial parameters are in range")
                .sample(&mut rng)
        };
        flat[i] = k;
        remaining -= k;
        mass_left -= p;
    }
    let counts = flat.chunks(joint.ny()).map(<[u64]>::to_vec).collect();
    EmpiricalDraw::from_counts(counts)
}
