//! EM fitting of mixture coefficients for a fixed degree vector.
//!
//! The update is the multiplicative self-consistency iteration
//!
//! ```text
//! p'(l) = (1/n) sum_k p(l) beta_{m,l}(x_k) / sum_i p(i) beta_{m,i}(x_k)
//! ```
//!
//! which never decreases the approximate Bernstein log-likelihood
//! `sum_k log f_m(x_k; p)` and never revives a zero weight.
//!
//! Each observation's basis row is kept as `exp(log beta - row_max)` together
//! with `row_max`, so responsibilities and log-likelihood contributions are
//! formed in log-scaled arithmetic without an `exp` per entry per iteration.
//! Observations are processed in a canonical (sorted) order and in fixed-size
//! blocks whose partial sums are combined in block order, so results do not
//! depend on the input row order or on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{accurate_sum, DegreeVector, LogBasis, MixtureCoefficients};
use crate::error::{MableError, Result};

/// Observations per reduction block.
const BLOCK: usize = 64;
/// Work (`n * K`) below which a pass stays on the calling thread.
const PARALLEL_WORK: usize = 1 << 18;
/// Largest `n * K` for which [`CacheMode::Auto`] keeps the basis matrix in memory.
const AUTO_CACHE_LIMIT: usize = 1 << 24;

/// `n x d` sample stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let n = rows.len();
        let mut points = Vec::with_capacity(n * d);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(MableError::InvalidData(format!(
                    "row {k} has {} columns, expected {d}",
                    row.len()
                )));
            }
            points.extend(row);
        }
        Self::from_flat(points, d)
    }

    pub fn from_flat(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || points.is_empty() {
            return Err(MableError::InvalidData(
                "dataset needs at least one observation and one dimension".into(),
            ));
        }
        if !points.len().is_multiple_of(d) {
            return Err(MableError::InvalidData(format!(
                "{} values cannot be split into rows of {d}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(MableError::InvalidData(format!(
                "non-finite value in row {} column {}",
                pos / d,
                pos % d
            )));
        }
        let n = points.len() / d;
        Ok(Self { points, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.points[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Copy with every coordinate clamped into `[eps, 1 - eps]`.
    pub fn clamped(&self, eps: f64) -> Self {
        Self {
            points: self.points.iter().map(|v| v.clamp(eps, 1.0 - eps)).collect(),
            n: self.n,
            d: self.d,
        }
    }

    fn check_unit_cube(&self) -> Result<()> {
        if let Some(pos) = self.points.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(MableError::InvalidData(format!(
                "row {} column {} is {} and lies outside [0, 1]",
                pos / self.d,
                pos % self.d,
                self.points[pos]
            )));
        }
        Ok(())
    }
}

/// Starting coefficients for the EM iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Uniform,
    Given(MixtureCoefficients),
}

/// Where basis rows live during a fit. Both modes give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheMode {
    /// Cache when `n * K` is at most 2^24 entries.
    #[default]
    Auto,
    /// Recompute each row every pass; `O(K)` working memory per block.
    RowWise,
    /// Keep the scaled `n x K` basis matrix.
    Cached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Relative log-likelihood tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Transformed data are clamped into `[boundary_eps, 1 - boundary_eps]`.
    pub boundary_eps: f64,
    pub init: Init,
    pub cache: CacheMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 50_000,
            boundary_eps: 1e-10,
            init: Init::Uniform,
            cache: CacheMode::Auto,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MableError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(MableError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.boundary_eps) {
            return Err(MableError::InvalidConfig(format!(
                "boundary_eps must lie in [0, 0.5), got {}",
                self.boundary_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// `loglik_trace[s]` is the log-likelihood after `s` EM steps.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_loglik: f64,
}

/// Basis rows for a fixed degree vector over canonically ordered data.
struct Engine {
    basis: LogBasis,
    k: usize,
    /// Sorted unit-cube points, row-major.
    points: Vec<f64>,
    /// Original row index of each sorted observation.
    origin: Vec<usize>,
    d: usize,
    cache: Option<(Vec<f64>, Vec<f64>)>,
}

impl Engine {
    fn new(degrees: &DegreeVector, data: &Dataset, mode: CacheMode) -> Result<Self> {
        if data.dim() != degrees.dim() {
            return Err(MableError::DimensionMismatch {
                expected: degrees.dim(),
                got: data.dim(),
            });
        }
        data.check_unit_cube()?;
        let mut origin: Vec<usize> = (0..data.n()).collect();
        origin.sort_by(|&a, &b| {
            data.row(a)
                .iter()
                .zip(data.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let points: Vec<f64> = origin.iter().flat_map(|&k| data.row(k).to_vec()).collect();
        let k = degrees.component_count();
        let mut engine = Self {
            basis: LogBasis::new(degrees),
            k,
            points,
            origin,
            d: data.dim(),
            cache: None,
        };
        let cache = match mode {
            CacheMode::Cached => true,
            CacheMode::RowWise => false,
            CacheMode::Auto => data.n().saturating_mul(k) <= AUTO_CACHE_LIMIT,
        };
        if cache {
            let n = data.n();
            let mut rows = vec![0.0; n * k];
            let mut offsets = vec![0.0; n];
            let fill = |(obs, (row, off)): (usize, (&mut [f64], &mut f64))| {
                let mut axis = Vec::new();
                *off = engine.scaled_row(obs, &mut axis, row);
            };
            if n * k >= PARALLEL_WORK {
                rows.par_chunks_mut(k)
                    .zip(offsets.par_iter_mut())
                    .enumerate()
                    .for_each(fill);
            } else {
                rows.chunks_mut(k)
                    .zip(offsets.iter_mut())
                    .enumerate()
                    .for_each(fill);
            }
            engine.cache = Some((rows, offsets));
        }
        Ok(engine)
    }

    fn n(&self) -> usize {
        self.origin.len()
    }

    /// Fills `out` with `exp(log beta_i - max)` and returns `max`.
    fn scaled_row(&self, obs: usize, axis: &mut Vec<f64>, out: &mut [f64]) -> f64 {
        let x = &self.points[obs * self.d..(obs + 1) * self.d];
        self.basis.row_into(x, axis, out);
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in out.iter_mut() {
            *v = (*v - max).exp();
        }
        max
    }

    /// One sweep over the data at `p`: returns `l(p)` and the EM image of `p`.
    fn pass(&self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.n();
        let blocks = n.div_ceil(BLOCK);
        let run_block = |b: usize| -> Result<(f64, Vec<f64>)> {
            let mut acc = vec![0.0; self.k];
            let mut scratch = Vec::new();
            let mut axis = Vec::new();
            let mut ll = 0.0;
            for obs in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let (row, offset): (&[f64], f64) = match &self.cache {
                    Some((rows, offsets)) => (&rows[obs * self.k..(obs + 1) * self.k], offsets[obs]),
                    None => {
                        scratch.resize(self.k, 0.0);
                        let off = self.scaled_row(obs, &mut axis, &mut scratch);
                        (&scratch[..], off)
                    }
                };
                let dens: f64 = p.iter().zip(row).map(|(a, b)| a * b).sum();
                if !(dens > 0.0) || !dens.is_finite() || !offset.is_finite() {
                    return Err(MableError::ZeroDensity {
                        index: self.origin[obs],
                    });
                }
                ll += offset + dens.ln();
                let inv = 1.0 / dens;
                for ((a, &pi), &bi) in acc.iter_mut().zip(p).zip(row) {
                    *a += pi * bi * inv;
                }
            }
            Ok((ll, acc))
        };
        let partials: Vec<Result<(f64, Vec<f64>)>> = if n * self.k >= PARALLEL_WORK {
            (0..blocks).into_par_iter().map(run_block).collect()
        } else {
            (0..blocks).map(run_block).collect()
        };
        let mut ll = 0.0;
        let mut total = vec![0.0; self.k];
        for part in partials {
            let (l, acc) = part?;
            ll += l;
            for (t, a) in total.iter_mut().zip(&acc) {
                *t += a;
            }
        }
        let inv_n = 1.0 / n as f64;
        for t in total.iter_mut() {
            *t *= inv_n;
        }
        let s = accurate_sum(&total);
        for t in total.iter_mut() {
            *t /= s;
        }
        Ok((ll, total))
    }

    fn loglik(&self, p: &[f64]) -> f64 {
        match self.pass(p) {
            Ok((ll, _)) => ll,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

fn check_coefficients(degrees: &DegreeVector, p: &MixtureCoefficients) -> Result<()> {
    if p.len() != degrees.component_count() {
        return Err(MableError::InvalidCoefficients(format!(
            "{} coefficients supplied for {} components",
            p.len(),
            degrees.component_count()
        )));
    }
    Ok(())
}

/// Approximate Bernstein log-likelihood `sum_k log f_m(x_k; p)` of unit-cube
/// data. Returns `-inf` when some observation has zero mixture density.
pub fn log_likelihood(
    degrees: &DegreeVector,
    p: &MixtureCoefficients,
    data: &Dataset,
) -> Result<f64> {
    check_coefficients(degrees, p)?;
    let engine = Engine::new(degrees, data, CacheMode::RowWise)?;
    Ok(engine.loglik(p.as_slice()))
}

/// One EM update of the mixture coefficients.
pub fn em_step(
    degrees: &DegreeVector,
    p: &MixtureCoefficients,
    data: &Dataset,
) -> Result<MixtureCoefficients> {
    check_coefficients(degrees, p)?;
    let engine = Engine::new(degrees, data, CacheMode::RowWise)?;
    let (_, next) = engine.pass(p.as_slice())?;
    Ok(MixtureCoefficients::from_normalized_unchecked(next))
}

/// Runs EM from `config.init` until the relative change of the
/// log-likelihood drops to `config.tol` or `config.max_iters` steps are taken.
///
/// Data must already be on the unit cube; they are clamped into
/// `[boundary_eps, 1 - boundary_eps]` before fitting.
pub fn fit_fixed_degree(
    degrees: &DegreeVector,
    data: &Dataset,
    config: &FitConfig,
) -> Result<(MixtureCoefficients, FitReport)> {
    config.validate()?;
    let k = degrees.component_count();
    if data.n() + 1 < k {
        log::warn!(
            "sample size {} is below K - 1 = {}; the likelihood may not be strictly concave",
            data.n(),
            k - 1
        );
    }
    let prepared = data.clamped(config.boundary_eps);
    let engine = Engine::new(degrees, &prepared, config.cache)?;
    let mut current = match &config.init {
        Init::Uniform => vec![1.0 / k as f64; k],
        Init::Given(p) => {
            check_coefficients(degrees, p)?;
            p.as_slice().to_vec()
        }
    };
    let (mut ll, mut next) = engine.pass(&current)?;
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        let (ll_next, after) = engine.pass(&next)?;
        iterations += 1;
        current = std::mem::replace(&mut next, after);
        trace.push(ll_next);
        let done = (ll_next - ll).abs() <= config.tol * (1.0 + ll.abs());
        ll = ll_next;
        if done {
            converged = true;
            break;
        }
    }
    Ok((
        MixtureCoefficients::from_normalized_unchecked(current),
        FitReport {
            loglik_trace: trace,
            iterations,
            converged,
            final_loglik: ll,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[usize]) -> DegreeVector {
        DegreeVector::new(v.to_vec()).unwrap()
    }

    fn data1(xs: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![vec![0.1, 0.2], vec![0.3]]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]]).is_err());
        let d = Dataset::new(vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(d.column(1), vec![0.2, 0.4]);
    }

    #[test]
    fn loglik_examples() {
        let p = MixtureCoefficients::new(vec![1.0]).unwrap();
        let data = Dataset::new(vec![vec![0.2, 0.9], vec![0.5, 0.1]]).unwrap();
        assert!(log_likelihood(&dv(&[0, 0]), &p, &data).unwrap().abs() < 1e-14);

        let half = MixtureCoefficients::new(vec![0.5, 0.5]).unwrap();
        assert!(log_likelihood(&dv(&[1]), &half, &data1(&[0.5])).unwrap().abs() < 1e-14);

        let third = MixtureCoefficients::uniform(3).unwrap();
        assert!(log_likelihood(&dv(&[2]), &third, &data1(&[0.25])).unwrap().abs() < 1e-14);
    }

    #[test]
    fn loglik_is_neg_inf_on_zero_density() {
        let p = MixtureCoefficients::point_mass(3, 2).unwrap();
        let ll = log_likelihood(&dv(&[2]), &p, &data1(&[0.0, 0.5])).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn em_step_examples() {
        let one = MixtureCoefficients::new(vec![1.0]).unwrap();
        let next = em_step(&dv(&[0, 0]), &one, &Dataset::new(vec![vec![0.3, 0.3]]).unwrap()).unwrap();
        assert_eq!(next.as_slice(), &[1.0]);

        let half = MixtureCoefficients::new(vec![0.5, 0.5]).unwrap();
        let next = em_step(&dv(&[1]), &half, &data1(&[0.5])).unwrap();
        assert!((next.as_slice()[0] - 0.5).abs() < 1e-15);

        // beta_{1,0}(0.25) = 1.5, beta_{1,1}(0.25) = 0.5
        let next = em_step(&dv(&[1]), &half, &data1(&[0.25])).unwrap();
        assert!((next.as_slice()[0] - 0.75).abs() < 1e-15);
        assert!((next.as_slice()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn em_step_reports_zero_density_observation() {
        let p = MixtureCoefficients::point_mass(3, 2).unwrap();
        let err = em_step(&dv(&[2]), &p, &data1(&[0.5, 0.0, 0.7])).unwrap_err();
        assert_eq!(err, MableError::ZeroDensity { index: 1 });
    }

    #[test]
    fn em_step_rejects_mismatches() {
        let p = MixtureCoefficients::uniform(2).unwrap();
        assert!(em_step(&dv(&[2]), &p, &data1(&[0.5])).is_err());
        let p = MixtureCoefficients::uniform(3).unwrap();
        assert!(em_step(&dv(&[2]), &p, &Dataset::new(vec![vec![0.1, 0.2]]).unwrap()).is_err());
        assert!(em_step(&dv(&[2]), &p, &data1(&[1.5])).is_err());
    }

    #[test]
    fn zero_weights_stay_zero() {
        let p = MixtureCoefficients::new(vec![0.5, 0.0, 0.5]).unwrap();
        let next = em_step(&dv(&[2]), &p, &data1(&[0.1, 0.4, 0.8])).unwrap();
        assert_eq!(next.as_slice()[1], 0.0);
    }

    #[test]
    fn degree_zero_converges_in_one_iteration() {
        let data = Dataset::new(vec![vec![0.2, 0.9], vec![0.5, 0.1]]).unwrap();
        let (p, report) = fit_fixed_degree(&dv(&[0, 0]), &data, &FitConfig::default()).unwrap();
        assert_eq!(p.as_slice(), &[1.0]);
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(report.final_loglik.abs() < 1e-14);
    }

    #[test]
    fn boundary_points_are_clamped_in_fit() {
        let data = data1(&[0.0, 1.0, 0.5]);
        let (_, report) = fit_fixed_degree(&dv(&[4]), &data, &FitConfig::default()).unwrap();
        assert!(report.final_loglik.is_finite());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let data = data1(&[0.1, 0.15, 0.2, 0.8, 0.85, 0.9]);
        let config = FitConfig {
            max_iters: 3,
            tol: 1e-15,
            ..FitConfig::default()
        };
        let (_, report) = fit_fixed_degree(&dv(&[10]), &data, &config).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 3);
        assert_eq!(report.loglik_trace.len(), 4);
    }

    #[test]
    fn cache_modes_agree_bitwise() {
        let xs: Vec<Vec<f64>> = (0..300)
            .map(|k| {
                let a = (k as f64 * 0.618_033_988_7).fract();
                let b = (k as f64 * 0.414_213_562_3).fract();
                vec![a, b]
            })
            .collect();
        let data = Dataset::new(xs).unwrap();
        let degrees = dv(&[6, 9]);
        let mut cfg = FitConfig {
            max_iters: 40,
            cache: CacheMode::Cached,
            ..FitConfig::default()
        };
        let (pc, rc) = fit_fixed_degree(&degrees, &data, &cfg).unwrap();
        cfg.cache = CacheMode::RowWise;
        let (pr, rr) = fit_fixed_degree(&degrees, &data, &cfg).unwrap();
        assert_eq!(pc, pr);
        assert_eq!(rc, rr);
    }

    #[test]
    fn invalid_config_rejected() {
        let data = data1(&[0.5]);
        for cfg in [
            FitConfig { tol: 0.0, ..FitConfig::default() },
            FitConfig { max_iters: 0, ..FitConfig::default() },
            FitConfig { boundary_eps: 0.5, ..FitConfig::default() },
        ] {
            assert!(fit_fixed_degree(&dv(&[1]), &data, &cfg).is_err());
        }
    }
}
