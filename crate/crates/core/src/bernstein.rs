//! Beta basis functions and Bernstein (beta-mixture) densities.
//!
//! A degree vector `m = (m_1, ..., m_d)` defines `K = prod(m_j + 1)` tensor
//! components. Component `i = (i_1, ..., i_d)` is the product density
//!
//! ```text
//! beta_{m,i}(t) = prod_j (m_j + 1) C(m_j, i_j) t_j^{i_j} (1 - t_j)^{m_j - i_j}
//! ```
//!
//! i.e. a product of `Beta(i_j + 1, m_j - i_j + 1)` densities. Multi-indices
//! are flattened in lexicographic order with the last index varying fastest:
//!
//! ```text
//! rank(i) = i_d + (m_d + 1) * (i_{d-1} + (m_{d-1} + 1) * (... + (m_2 + 1) * i_1))
//! ```
//!
//! All basis evaluation happens in log space. Degrees near one hundred are
//! routine and the binomial coefficients overflow `f64` long before that.
//!
//! Two kernel conventions coexist here. The mixture model uses the
//! normalized beta density above; [`classical_bernstein_operator`] uses the
//! unnormalized kernel `C(m, i) t^i (1 - t)^{m - i}`. Nothing in this module
//! mixes the two.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{MableError, Result};
use crate::quadrature::TensorQuadrature;

/// Largest admissible number of mixture components.
pub const MAX_COMPONENTS: usize = 1 << 31;

/// Tolerance on `|sum(p) - 1|` for a coefficient vector to count as a simplex point.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Per-dimension polynomial degrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DegreeVector(Vec<usize>);

impl DegreeVector {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(MableError::InvalidDegrees(
                "degree vector must have at least one entry".into(),
            ));
        }
        let mut k: usize = 1;
        for &m in &degrees {
            k = k
                .checked_mul(m + 1)
                .filter(|&k| k <= MAX_COMPONENTS)
                .ok_or_else(|| {
                    MableError::InvalidDegrees(format!(
                        "component count for degrees {degrees:?} exceeds 2^31"
                    ))
                })?;
        }
        Ok(Self(degrees))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, j: usize) -> usize {
        self.0[j]
    }

    /// Number of mixture components `K`.
    pub fn component_count(&self) -> usize {
        self.0.iter().map(|&m| m + 1).product()
    }

    pub fn rank(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.dim() {
            return Err(MableError::DimensionMismatch {
                expected: self.dim(),
                got: indices.len(),
            });
        }
        let mut rank = 0;
        for (&i, &m) in indices.iter().zip(&self.0) {
            if i > m {
                return Err(MableError::Domain(format!(
                    "index {i} exceeds degree {m}"
                )));
            }
            rank = rank * (m + 1) + i;
        }
        Ok(rank)
    }

    pub fn multi_index(&self, rank: usize) -> Result<Vec<usize>> {
        if rank >= self.component_count() {
            return Err(MableError::Domain(format!(
                "rank {rank} out of range for {} components",
                self.component_count()
            )));
        }
        let mut out = vec![0; self.dim()];
        let mut r = rank;
        for j in (0..self.dim()).rev() {
            let base = self.0[j] + 1;
            out[j] = r % base;
            r /= base;
        }
        Ok(out)
    }

    /// All multi-indices in rank order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.component_count()).map(move |r| {
            self.multi_index(r)
                .expect("rank below component count is always valid")
        })
    }
}

impl TryFrom<Vec<usize>> for DegreeVector {
    type Error = MableError;

    fn try_from(value: Vec<usize>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DegreeVector> for Vec<usize> {
    fn from(value: DegreeVector) -> Self {
        value.0
    }
}

/// A multi-index together with its lexicographic rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    indices: Vec<usize>,
    rank: usize,
}

impl MultiIndex {
    pub fn from_indices(degrees: &DegreeVector, indices: Vec<usize>) -> Result<Self> {
        let rank = degrees.rank(&indices)?;
        Ok(Self { indices, rank })
    }

    pub fn from_rank(degrees: &DegreeVector, rank: usize) -> Result<Self> {
        let indices = degrees.multi_index(rank)?;
        Ok(Self { indices, rank })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Mixture weights on the `(K - 1)`-simplex, indexed by multi-index rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixtureCoefficients(Vec<f64>);

impl MixtureCoefficients {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(MableError::InvalidCoefficients(
                "at least one weight is required".into(),
            ));
        }
        if let Some((idx, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(MableError::InvalidCoefficients(format!(
                "weight {idx} is {w}; weights must be finite and nonnegative"
            )));
        }
        let total = accurate_sum(&weights);
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(MableError::InvalidCoefficients(format!(
                "weights sum to {total:.17}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Scales nonnegative weights onto the simplex.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total = accurate_sum(&weights);
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(MableError::InvalidCoefficients(
                "cannot normalize weights with nonpositive total or negative entries".into(),
            ));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(weights)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MableError::InvalidCoefficients(
                "at least one weight is required".into(),
            ));
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    pub fn point_mass(k: usize, rank: usize) -> Result<Self> {
        if rank >= k {
            return Err(MableError::InvalidCoefficients(format!(
                "rank {rank} out of range for {k} components"
            )));
        }
        let mut w = vec![0.0; k];
        w[rank] = 1.0;
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_normalized_unchecked(weights: Vec<f64>) -> Self {
        Self(weights)
    }
}

impl TryFrom<Vec<f64>> for MixtureCoefficients {
    type Error = MableError;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<MixtureCoefficients> for Vec<f64> {
    fn from(value: MixtureCoefficients) -> Self {
        value.0
    }
}

/// Neumaier-compensated sum.
pub(crate) fn accurate_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Axis-aligned box `[a, b]` carrying the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SupportBoxRepr")]
pub struct SupportBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct SupportBoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<SupportBoxRepr> for SupportBox {
    type Error = MableError;

    fn try_from(value: SupportBoxRepr) -> Result<Self> {
        Self::new(value.lower, value.upper)
    }
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(MableError::InvalidSupport(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(MableError::InvalidSupport(format!(
                    "dimension {j}: need finite a < b, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    /// `V_d = prod(b_j - a_j)`.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim()
            && y
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Maps a point of the box onto the unit cube. Values are clamped into
    /// [0, 1] to absorb rounding at the edges.
    pub fn to_unit_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        Ok(y.iter()
            .enumerate()
            .map(|(j, v)| ((v - self.lower[j]) / self.width(j)).clamp(0.0, 1.0))
            .collect())
    }

    pub fn from_unit_point(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(j, v)| self.lower[j] + v * self.width(j))
            .collect()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(MableError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        if !self.contains(y) {
            return Err(MableError::OutsideSupport { point: y.to_vec() });
        }
        Ok(())
    }
}

/// A fitted (or constructed) Bernstein density estimator on a support box.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinModel {
    degrees: DegreeVector,
    coefficients: MixtureCoefficients,
    support: SupportBox,
}

impl BernsteinModel {
    pub fn new(
        degrees: DegreeVector,
        coefficients: MixtureCoefficients,
        support: SupportBox,
    ) -> Result<Self> {
        if coefficients.len() != degrees.component_count() {
            return Err(MableError::InvalidCoefficients(format!(
                "{} coefficients supplied for {} components",
                coefficients.len(),
                degrees.component_count()
            )));
        }
        if support.dim() != degrees.dim() {
            return Err(MableError::DimensionMismatch {
                expected: degrees.dim(),
                got: support.dim(),
            });
        }
        Ok(Self {
            degrees,
            coefficients,
            support,
        })
    }

    /// Uniform weights on the unit cube.
    pub fn uniform(degrees: DegreeVector) -> Result<Self> {
        let k = degrees.component_count();
        let d = degrees.dim();
        Self::new(degrees, MixtureCoefficients::uniform(k)?, SupportBox::unit(d)?)
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    pub fn coefficients(&self) -> &MixtureCoefficients {
        &self.coefficients
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.degrees.dim()
    }

    /// Same coefficients on a different box.
    pub fn with_support(&self, support: SupportBox) -> Result<Self> {
        Self::new(self.degrees.clone(), self.coefficients.clone(), support)
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        density_eval(self, y)
    }

    pub fn cdf(&self, y: &[f64]) -> Result<f64> {
        cdf_eval(self, y)
    }

    /// Mixture density `f_m(t; p)` on the unit cube, ignoring the support box.
    pub fn unit_density(&self, t: &[f64]) -> Result<f64> {
        let evaluator = DensityEvaluator::new(self);
        evaluator.unit_density(t)
    }

    /// Densities at many points of the support, evaluated in parallel.
    pub fn density_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let evaluator = DensityEvaluator::new(self);
        let inv_volume = 1.0 / self.support.volume();
        points
            .par_iter()
            .map(|y| {
                let t = self.support.to_unit_point(y)?;
                Ok(evaluator.unit_density(&t)? * inv_volume)
            })
            .collect()
    }

    pub fn cdf_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|y| cdf_eval(self, y)).collect()
    }
}

fn check_index(i: usize, m: usize, t: f64) -> Result<()> {
    if i > m {
        return Err(MableError::Domain(format!(
            "basis index {i} exceeds degree {m}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(MableError::Domain(format!("argument {t} outside [0, 1]")));
    }
    Ok(())
}

fn ln_choose(m: usize, i: usize) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((m - i) as f64 + 1.0)
}

/// `i ln t + (m - i) ln(1 - t)` with the endpoint conventions `0 ln 0 = 0`.
fn ln_monomial(i: usize, m: usize, t: f64) -> f64 {
    let left = if i == 0 { 0.0 } else { i as f64 * t.ln() };
    let right = if i == m {
        0.0
    } else {
        (m - i) as f64 * (-t).ln_1p()
    };
    left + right
}

/// `log beta_{m,i}(t)`, the log density of `Beta(i + 1, m - i + 1)`.
///
/// Returns `-inf` exactly where the density vanishes (`t = 0` with `i > 0`,
/// or `t = 1` with `i < m`).
pub fn beta_log_density(i: usize, m: usize, t: f64) -> Result<f64> {
    check_index(i, m, t)?;
    Ok(((m + 1) as f64).ln() + ln_choose(m, i) + ln_monomial(i, m, t))
}

/// Regularized incomplete beta `I_t(i + 1, m - i + 1)`, the CDF of
/// `Beta(i + 1, m - i + 1)`.
///
/// For integer shapes this is the binomial tail `P(Bin(m + 1, t) >= i + 1)`,
/// summed here in log space. The smaller tail is summed and complemented when
/// needed, so values near 1 keep full relative accuracy in `1 - F`.
pub fn beta_cdf(i: usize, m: usize, t: f64) -> Result<f64> {
    check_index(i, m, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let n = m + 1;
    let log_term = |k: usize| ln_choose(n, k) + ln_monomial(k, n, t);
    if (i + 1) as f64 >= n as f64 * t {
        let upper: Vec<f64> = (i + 1..=n).map(log_term).collect();
        Ok(log_sum_exp(&upper).exp().clamp(0.0, 1.0))
    } else {
        let lower: Vec<f64> = (0..=i).map(log_term).collect();
        Ok((-log_sum_exp(&lower).exp_m1()).clamp(0.0, 1.0))
    }
}

/// Every `beta_cdf(i, m, t)` for `i = 0..=m`, via suffix sums of the
/// `Bin(m + 1, t)` probabilities.
pub(crate) fn beta_cdf_table(m: usize, t: f64) -> Vec<f64> {
    if t <= 0.0 {
        return vec![0.0; m + 1];
    }
    if t >= 1.0 {
        return vec![1.0; m + 1];
    }
    let n = m + 1;
    let mut out = vec![0.0; m + 1];
    let mut tail = 0.0;
    for k in (1..=n).rev() {
        tail += (ln_choose(n, k) + ln_monomial(k, n, t)).exp();
        out[k - 1] = tail.min(1.0);
    }
    out
}

/// Numerically stable `log(sum(exp(values)))`; `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Cached normalizing constants for the tensor log basis of one degree vector.
#[derive(Debug, Clone)]
pub(crate) struct LogBasis {
    degrees: DegreeVector,
    /// `ln(m_j + 1) + ln C(m_j, i)` per dimension.
    log_norm: Vec<Vec<f64>>,
}

impl LogBasis {
    pub(crate) fn new(degrees: &DegreeVector) -> Self {
        let log_norm = degrees
            .as_slice()
            .iter()
            .map(|&m| {
                let lm = ((m + 1) as f64).ln();
                (0..=m).map(|i| lm + ln_choose(m, i)).collect()
            })
            .collect();
        Self {
            degrees: degrees.clone(),
            log_norm,
        }
    }

    pub(crate) fn component_count(&self) -> usize {
        self.degrees.component_count()
    }

    fn axis_row(&self, j: usize, t: f64, out: &mut Vec<f64>) {
        let m = self.degrees.get(j);
        out.clear();
        if t <= 0.0 {
            out.extend((0..=m).map(|i| {
                if i == 0 {
                    self.log_norm[j][0]
                } else {
                    f64::NEG_INFINITY
                }
            }));
            return;
        }
        if t >= 1.0 {
            out.extend((0..=m).map(|i| {
                if i == m {
                    self.log_norm[j][m]
                } else {
                    f64::NEG_INFINITY
                }
            }));
            return;
        }
        let lt = t.ln();
        let l1t = (-t).ln_1p();
        out.extend(
            (0..=m).map(|i| self.log_norm[j][i] + i as f64 * lt + (m - i) as f64 * l1t),
        );
    }

    /// Writes the full length-`K` log basis row for a unit-cube point.
    /// The caller guarantees `x` has the right dimension and lies in `[0, 1]^d`.
    pub(crate) fn row_into(&self, x: &[f64], axis: &mut Vec<f64>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.component_count());
        let mut len = 1;
        out[0] = 0.0;
        for (j, &t) in x.iter().enumerate() {
            self.axis_row(j, t, axis);
            let width = axis.len();
            // Expand in place from the back so unread prefixes survive.
            for a in (0..len).rev() {
                let base = out[a];
                for i in (0..width).rev() {
                    out[a * width + i] = base + axis[i];
                }
            }
            len *= width;
        }
    }
}

fn check_unit_point(degrees: &DegreeVector, x: &[f64]) -> Result<()> {
    if x.len() != degrees.dim() {
        return Err(MableError::DimensionMismatch {
            expected: degrees.dim(),
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(MableError::Domain(format!(
            "coordinate {v} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Length-`K` row of `log beta_{m,i}(x)` in rank order.
///
/// Built from `d` per-axis tables, so the cost is `O(sum(m_j) + K)`.
pub fn log_basis_row(degrees: &DegreeVector, x: &[f64]) -> Result<Vec<f64>> {
    check_unit_point(degrees, x)?;
    let basis = LogBasis::new(degrees);
    let mut out = vec![0.0; degrees.component_count()];
    let mut axis = Vec::new();
    basis.row_into(x, &mut axis, &mut out);
    Ok(out)
}

/// Reusable evaluator holding the log weights and basis constants of a model.
pub(crate) struct DensityEvaluator<'a> {
    model: &'a BernsteinModel,
    basis: LogBasis,
    log_weights: Vec<f64>,
}

impl<'a> DensityEvaluator<'a> {
    pub(crate) fn new(model: &'a BernsteinModel) -> Self {
        Self {
            model,
            basis: LogBasis::new(&model.degrees),
            log_weights: model.coefficients.as_slice().iter().map(|p| p.ln()).collect(),
        }
    }

    pub(crate) fn unit_density(&self, t: &[f64]) -> Result<f64> {
        check_unit_point(&self.model.degrees, t)?;
        let mut row = vec![0.0; self.basis.component_count()];
        let mut axis = Vec::new();
        self.basis.row_into(t, &mut axis, &mut row);
        // log-sum-exp restricted to strictly positive weights
        let mut max = f64::NEG_INFINITY;
        for (lw, lb) in self.log_weights.iter().zip(&row) {
            if *lw > f64::NEG_INFINITY {
                max = max.max(lw + lb);
            }
        }
        if max == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let sum: f64 = self
            .log_weights
            .iter()
            .zip(&row)
            .filter(|(lw, _)| **lw > f64::NEG_INFINITY)
            .map(|(lw, lb)| (lw + lb - max).exp())
            .sum();
        Ok((max + sum.ln()).exp())
    }
}

/// Density of the model at a point of its support box:
/// `V_d^{-1} sum_i p(i) prod_j beta_{m_j,i_j}((y_j - a_j) / (b_j - a_j))`.
pub fn density_eval(model: &BernsteinModel, y: &[f64]) -> Result<f64> {
    let t = model.support.to_unit_point(y)?;
    Ok(model.unit_density(&t)? / model.support.volume())
}

/// Joint distribution function of the model at a point of its support box.
pub fn cdf_eval(model: &BernsteinModel, y: &[f64]) -> Result<f64> {
    let t = model.support.to_unit_point(y)?;
    unit_cdf(model, &t)
}

pub(crate) fn unit_cdf(model: &BernsteinModel, t: &[f64]) -> Result<f64> {
    check_unit_point(&model.degrees, t)?;
    let k = model.degrees.component_count();
    let mut row = vec![0.0; k];
    row[0] = 1.0;
    let mut len = 1;
    for (j, &tj) in t.iter().enumerate() {
        let axis = beta_cdf_table(model.degrees.get(j), tj);
        let width = axis.len();
        for a in (0..len).rev() {
            let base = row[a];
            for i in (0..width).rev() {
                row[a * width + i] = base * axis[i];
            }
        }
        len *= width;
    }
    let total: f64 = model
        .coefficients
        .as_slice()
        .iter()
        .zip(&row)
        .map(|(p, b)| p * b)
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

/// Chi-square divergence `int (f_m - f)^2 / f` over the unit cube, where
/// `f_m` is the model's mixture density on the unit cube and `truth` is `f`.
pub fn chisq_divergence<F>(
    model: &BernsteinModel,
    truth: F,
    quadrature: &TensorQuadrature,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if quadrature.dim() != model.dim() {
        return Err(MableError::DimensionMismatch {
            expected: model.dim(),
            got: quadrature.dim(),
        });
    }
    let evaluator = DensityEvaluator::new(model);
    quadrature.try_integrate(|t| {
        let f = truth(t);
        if !(f > 0.0) || !f.is_finite() {
            return Err(MableError::NonPositiveTruth {
                node: t.to_vec(),
                value: f,
            });
        }
        let fm = evaluator.unit_density(t)?;
        Ok((fm - f) * (fm - f) / f)
    })
}

/// Draws `n` points from the model, deterministic in `seed`.
pub fn sample_model(model: &BernsteinModel, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_model_with_rng(model, n, &mut rng)
}

pub(crate) fn sample_model_with_rng<R: Rng + ?Sized>(
    model: &BernsteinModel,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let picker = WeightedIndex::new(model.coefficients.as_slice())
        .map_err(|e| MableError::Sampling(e.to_string()))?;
    let axes: Vec<Vec<Beta<f64>>> = model
        .degrees
        .as_slice()
        .iter()
        .map(|&m| {
            (0..=m)
                .map(|i| {
                    Beta::new((i + 1) as f64, (m - i + 1) as f64)
                        .map_err(|e| MableError::Sampling(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let rank = picker.sample(rng);
        let idx = model.degrees.multi_index(rank)?;
        let t: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| axes[j][i].sample(rng))
            .collect();
        out.push(model.support.from_unit_point(&t));
    }
    Ok(out)
}

/// Classical multivariate Bernstein polynomial of `f` evaluated at `x`:
/// `sum_i f(i / m) prod_j C(m_j, i_j) x_j^{i_j} (1 - x_j)^{m_j - i_j}`.
///
/// Uses the unnormalized kernel. For `m_j = 0` the single node is taken at 0.
pub fn classical_bernstein_operator<F>(f: F, degrees: &DegreeVector, x: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    check_unit_point(degrees, x)?;
    let axes: Vec<Vec<f64>> = degrees
        .as_slice()
        .iter()
        .zip(x)
        .map(|(&m, &t)| {
            (0..=m)
                .map(|i| {
                    let log_mono = if (t == 0.0 && i > 0) || (t == 1.0 && i < m) {
                        f64::NEG_INFINITY
                    } else {
                        ln_monomial(i, m, t)
                    };
                    (ln_choose(m, i) + log_mono).exp()
                })
                .collect()
        })
        .collect();
    let mut node = vec![0.0; degrees.dim()];
    let mut total = 0.0;
    for idx in degrees.indices() {
        let mut weight = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            let m = degrees.get(j);
            node[j] = if m == 0 { 0.0 } else { i as f64 / m as f64 };
            weight *= axes[j][i];
        }
        if weight != 0.0 {
            total += f(&node) * weight;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn dv(v: &[usize]) -> DegreeVector {
        DegreeVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn degree_vector_validation() {
        assert!(DegreeVector::new(vec![]).is_err());
        assert!(DegreeVector::new(vec![0]).is_ok());
        // (2^16)^2 = 2^32 components
        assert!(DegreeVector::new(vec![65535, 65535]).is_err());
        assert_eq!(dv(&[12, 8]).component_count(), 117);
    }

    #[test]
    fn rank_is_lexicographic_last_fastest() {
        let d = dv(&[2, 1]);
        let order: Vec<Vec<usize>> = d.indices().collect();
        assert_eq!(
            order,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![1, 1],
                vec![2, 0],
                vec![2, 1]
            ]
        );
        for (r, idx) in order.iter().enumerate() {
            assert_eq!(d.rank(idx).unwrap(), r);
            let mi = MultiIndex::from_rank(&d, r).unwrap();
            assert_eq!(mi.indices(), idx.as_slice());
        }
        assert!(d.rank(&[3, 0]).is_err());
        assert!(d.multi_index(6).is_err());
    }

    #[test]
    fn coefficient_validation() {
        assert!(MixtureCoefficients::new(vec![0.5, 0.5]).is_ok());
        assert!(MixtureCoefficients::new(vec![0.5, 0.6]).is_err());
        assert!(MixtureCoefficients::new(vec![1.5, -0.5]).is_err());
        assert!(MixtureCoefficients::new(vec![]).is_err());
        let p = MixtureCoefficients::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn support_validation() {
        assert!(SupportBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(SupportBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(SupportBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let b = SupportBox::new(vec![0.0, 0.0], vec![7.0, 120.0]).unwrap();
        assert_eq!(b.volume(), 840.0);
    }

    #[test]
    fn beta_log_density_examples() {
        assert!(beta_log_density(0, 0, 0.37).unwrap().abs() < 1e-14);
        let v = beta_log_density(1, 2, 0.5).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-14);
        assert_eq!(beta_log_density(1, 3, 0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(beta_log_density(1, 3, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(beta_log_density(0, 3, 0.0).unwrap().is_finite());
        assert!(beta_log_density(3, 3, 1.0).unwrap().is_finite());
        assert!(beta_log_density(4, 3, 0.5).is_err());
        assert!(beta_log_density(1, 3, 1.5).is_err());
        assert!(beta_log_density(1, 3, -0.1).is_err());
    }

    #[test]
    fn beta_density_integrates_to_one() {
        let rule = GaussLegendre::new(64).unwrap();
        let total = rule.integrate(|t| beta_log_density(4, 8, t).unwrap().exp());
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn beta_cdf_examples() {
        for t in [0.0, 0.13, 0.5, 0.99, 1.0] {
            assert!((beta_cdf(0, 0, t).unwrap() - t).abs() < 1e-15);
        }
        assert!((beta_cdf(0, 2, 0.5).unwrap() - 0.875).abs() < 1e-14);
        assert_eq!(beta_cdf(4, 8, 1.0).unwrap(), 1.0);
        assert_eq!(beta_cdf(4, 8, 0.0).unwrap(), 0.0);
        assert!(beta_cdf(3, 2, 0.5).is_err());
    }

    #[test]
    fn beta_cdf_matches_quadrature_of_density() {
        // I_t = int_0^t beta_{m,i}; Gauss-Legendre on [0, t] is exact for degree m.
        let rule = GaussLegendre::new(32).unwrap();
        for (i, m, t) in [(0, 2, 0.5), (3, 7, 0.3), (10, 20, 0.61), (40, 95, 0.45)] {
            let oracle = t * rule.integrate(|s| beta_log_density(i, m, s * t).unwrap().exp());
            let got = beta_cdf(i, m, t).unwrap();
            assert!((got - oracle).abs() < 1e-12, "({i},{m},{t}) {got} vs {oracle}");
            let table = beta_cdf_table(m, t);
            assert!((table[i] - got).abs() < 1e-13);
        }
    }

    #[test]
    fn log_basis_row_examples() {
        let r = log_basis_row(&dv(&[0, 0]), &[0.3, 0.9]).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-14);
        let r = log_basis_row(&dv(&[1, 1]), &[0.5, 0.5]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-14));
        let d = dv(&[2, 1]);
        let r = log_basis_row(&d, &[0.25, 0.5]).unwrap();
        let rank = d.rank(&[1, 0]).unwrap();
        assert!((r[rank] - 1.125f64.ln()).abs() < 1e-14);
        assert!(log_basis_row(&d, &[0.25]).is_err());
        assert!(log_basis_row(&d, &[0.25, 1.2]).is_err());
    }

    #[test]
    fn log_basis_row_matches_per_axis_sums() {
        let d = dv(&[3, 0, 4]);
        let x = [0.2, 0.7, 1.0];
        let row = log_basis_row(&d, &x).unwrap();
        for (r, idx) in d.indices().enumerate() {
            let want: f64 = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| beta_log_density(i, d.get(j), x[j]).unwrap())
                .sum();
            if want == f64::NEG_INFINITY {
                assert_eq!(row[r], want);
            } else {
                assert!((row[r] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn uniform_weights_give_unit_density() {
        let model = BernsteinModel::uniform(dv(&[5, 3])).unwrap();
        for y in [[0.1, 0.2], [0.5, 0.5], [0.99, 0.01], [0.0, 1.0]] {
            assert!((model.density(&y).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaled_uniform_density() {
        let model = BernsteinModel::new(
            dv(&[0]),
            MixtureCoefficients::new(vec![1.0]).unwrap(),
            SupportBox::new(vec![0.0], vec![2.0]).unwrap(),
        )
        .unwrap();
        assert!((model.density(&[1.3]).unwrap() - 0.5).abs() < 1e-15);
        assert!(model.density(&[2.1]).is_err());
    }

    #[test]
    fn cdf_corners_and_uniform() {
        let model = BernsteinModel::uniform(dv(&[4, 6])).unwrap();
        assert!((model.cdf(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(model.cdf(&[0.0, 0.0]).unwrap(), 0.0);
        let one = BernsteinModel::uniform(dv(&[0])).unwrap();
        assert!((one.cdf(&[0.42]).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_components_are_skipped() {
        let d = dv(&[2]);
        let p = MixtureCoefficients::point_mass(3, 2).unwrap();
        let model = BernsteinModel::new(d, p, SupportBox::unit(1).unwrap()).unwrap();
        // beta_{2,2}(t) = 3 t^2 vanishes at 0
        assert_eq!(model.density(&[0.0]).unwrap(), 0.0);
        assert!((model.density(&[0.5]).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn sample_zero_is_empty() {
        let model = BernsteinModel::uniform(dv(&[2, 2])).unwrap();
        assert!(sample_model(&model, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = BernsteinModel::uniform(dv(&[3, 2])).unwrap();
        let a = sample_model(&model, 50, 7).unwrap();
        let b = sample_model(&model, 50, 7).unwrap();
        let c = sample_model(&model, 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn operator_examples() {
        let d = dv(&[7, 3]);
        let c = classical_bernstein_operator(|_| 2.5, &d, &[0.3, 0.8]).unwrap();
        assert!((c - 2.5).abs() < 1e-13);
        for m in [1, 5, 40] {
            let d = dv(&[m]);
            for x in [0.0, 0.17, 0.5, 1.0] {
                let v = classical_bernstein_operator(|t| t[0], &d, &[x]).unwrap();
                assert!((v - x).abs() < 1e-13);
            }
        }
        let v = classical_bernstein_operator(|t| t[0] * t[0], &dv(&[10]), &[0.5]).unwrap();
        assert!((v - 0.275).abs() < 1e-14);
        // m = 0 evaluates f at the single node 0
        let v = classical_bernstein_operator(|t| t[0] + 3.0, &dv(&[0]), &[0.6]).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
