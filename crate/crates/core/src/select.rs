//! Per-dimension degree selection.
//!
//! Each marginal is fitted at consecutive candidate degrees
//! `m_0, m_0 + 1, ..., m_0 + k`, giving profile log-likelihoods
//! `l_0, ..., l_k`. The increments are treated as exponential variables with
//! one change in mean, and the change point maximizing
//!
//! ```text
//! R(tau) = -tau log((l_tau - l_0) / tau)
//!          - (k - tau) log((l_k - l_tau) / (k - tau))
//!          + k log((l_k - l_0) / k)
//! ```
//!
//! picks the degree `m_0 + tau`. Only interior points `1 <= tau <= k - 1`
//! are scored because the second term is `0 / 0` at `tau = k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::DegreeVector;
use crate::em::{fit_fixed_degree, Dataset, FitConfig, Init};
use crate::error::{MableError, Result};

/// Default number of candidates above the moment bound in an automatic grid.
pub const DEFAULT_GRID_COUNT: usize = 40;

/// Statistics within this distance of the maximum count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Candidate degrees `base, base + 1, ..., base + count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateGrid {
    base: usize,
    count: usize,
}

impl CandidateGrid {
    pub fn new(base: usize, count: usize) -> Result<Self> {
        if base < 1 {
            return Err(MableError::InvalidConfig(
                "grid base degree must be at least 1".into(),
            ));
        }
        if count < 2 {
            return Err(MableError::InvalidConfig(format!(
                "grid needs at least two increments, got {count}"
            )));
        }
        Ok(Self { base, count })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn degree(&self, i: usize) -> usize {
        self.base + i
    }

    pub fn candidates(&self) -> impl Iterator<Item = usize> {
        self.base..=self.base + self.count
    }
}

/// First candidate of an automatic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStart {
    /// Degree 1, so the grid also covers the steep part of the profile below
    /// the moment bound. A change point can only be found if the grid
    /// contains degrees on both sides of it, and for beta-like marginals the
    /// bound sits right at the true degree.
    #[default]
    One,
    /// The moment bound [`min_degree_bound`] itself.
    Bound,
}

/// How grids are chosen for [`select_degrees`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    /// Per marginal, candidates from `start` up to `min_degree_bound + count`.
    Auto { start: GridStart, count: usize },
    /// One grid per dimension.
    Explicit(Vec<CandidateGrid>),
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self::Auto {
            start: GridStart::default(),
            count: DEFAULT_GRID_COUNT,
        }
    }
}

/// Automatic grid for one unit-interval marginal.
pub fn auto_grid(x: &[f64], start: GridStart, count: usize) -> Result<CandidateGrid> {
    let bound = min_degree_bound(x)?;
    match start {
        GridStart::One => CandidateGrid::new(1, bound - 1 + count),
        GridStart::Bound => CandidateGrid::new(bound, count),
    }
}

/// Diagnostics of the selection for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSelection {
    pub grid: CandidateGrid,
    pub logliks: Vec<f64>,
    /// `R(tau)` for `tau = 1..k-1`; `None` marks the `-inf` sentinel.
    pub statistics: Vec<Option<f64>>,
    pub tau: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSelection {
    pub dimensions: Vec<DimensionSelection>,
}

impl DegreeSelection {
    pub fn degrees(&self) -> Result<DegreeVector> {
        DegreeVector::new(self.dimensions.iter().map(|d| d.degree).collect())
    }
}

/// `max{1, ceil(mu (1 - mu) / sigma^2 - 3)}`.
///
/// The ceiling ignores excess below `1e-9` so that exact moments such as
/// those of `Beta(7, 7)` are not pushed up by rounding.
pub fn degree_bound_from_moments(mean: f64, variance: f64) -> Result<usize> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(MableError::Selection {
            dim: 0,
            reason: format!("degenerate marginal with variance {variance}"),
        });
    }
    let raw = mean * (1.0 - mean) / variance - 3.0;
    let bound = (raw - 1e-9).ceil();
    Ok(if bound < 1.0 { 1 } else { bound as usize })
}

/// Lower bound for the degree of a unit-interval marginal from its sample
/// mean and unbiased sample variance.
pub fn min_degree_bound(x: &[f64]) -> Result<usize> {
    if x.len() < 2 {
        return Err(MableError::Selection {
            dim: 0,
            reason: "degree bound needs at least two observations".into(),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    degree_bound_from_moments(mean, var)
}

/// Final log-likelihood of a one-dimensional fit at every candidate degree.
pub fn profile_logliks(x: &[f64], grid: &CandidateGrid, config: &FitConfig) -> Result<Vec<f64>> {
    let data = Dataset::from_flat(x.to_vec(), 1)?;
    let config = FitConfig {
        init: Init::Uniform,
        ..config.clone()
    };
    let candidates: Vec<usize> = grid.candidates().collect();
    candidates
        .par_iter()
        .map(|&m| {
            let degrees = DegreeVector::new(vec![m])?;
            fit_fixed_degree(&degrees, &data, &config)
                .map(|(_, report)| report.final_loglik)
                .map_err(|e| MableError::Candidate {
                    degree: m,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// `sign * count * log(total / count)`, with `0 log 0 = 0` on a flat segment
/// and `None` for a negative total.
fn segment_term(total: f64, count: usize) -> Option<f64> {
    if total < 0.0 || total.is_nan() {
        return None;
    }
    if total == 0.0 {
        return Some(0.0);
    }
    Some(count as f64 * (total / count as f64).ln())
}

/// Change-point statistic `R(tau)` for `tau` in `1..k` where
/// `k = logliks.len() - 1`. Returns `-inf` where the leading segment does
/// not increase or the trailing segment decreases.
pub fn changepoint_stat(logliks: &[f64], tau: usize) -> f64 {
    let k = logliks.len().saturating_sub(1);
    if k < 2 || tau == 0 || tau >= k {
        return f64::NEG_INFINITY;
    }
    let head = logliks[tau] - logliks[0];
    let tail = logliks[k] - logliks[tau];
    let whole = logliks[k] - logliks[0];
    if !(head > 0.0) || !(whole > 0.0) {
        return f64::NEG_INFINITY;
    }
    match segment_term(tail, k - tau) {
        Some(tail_term) => {
            let head_term = tau as f64 * (head / tau as f64).ln();
            let whole_term = k as f64 * (whole / k as f64).ln();
            -head_term - tail_term + whole_term
        }
        None => f64::NEG_INFINITY,
    }
}

/// `R(tau)` for every interior `tau`.
pub fn changepoint_stats(logliks: &[f64]) -> Vec<f64> {
    let k = logliks.len().saturating_sub(1);
    (1..k).map(|tau| changepoint_stat(logliks, tau)).collect()
}

/// Smallest maximizer of `R(tau)`, ties within [`TIE_TOL`].
pub fn changepoint_argmax(logliks: &[f64]) -> Result<usize> {
    changepoint_argmax_in(logliks, 0)
}

fn changepoint_argmax_in(logliks: &[f64], dim: usize) -> Result<usize> {
    let k = logliks.len().saturating_sub(1);
    if k < 2 {
        return Err(MableError::Selection {
            dim,
            reason: format!("need at least three profile log-likelihoods, got {}", logliks.len()),
        });
    }
    if let Some(bad) = logliks.iter().position(|l| !l.is_finite()) {
        return Err(MableError::Selection {
            dim,
            reason: format!("profile log-likelihood {bad} is not finite"),
        });
    }
    if !(logliks[k] - logliks[0] > 0.0) {
        return Err(MableError::Selection {
            dim,
            reason: "profile log-likelihood does not increase across the grid".into(),
        });
    }
    let stats = changepoint_stats(logliks);
    let best = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(MableError::Selection {
            dim,
            reason: "no informative change point; widen the candidate grid".into(),
        });
    }
    let idx = stats
        .iter()
        .position(|&r| r >= best - TIE_TOL)
        .expect("the maximum is attained");
    Ok(idx + 1)
}

/// Selection over `grid` from already computed profile log-likelihoods.
pub fn select_from_logliks(grid: &CandidateGrid, logliks: Vec<f64>) -> Result<DimensionSelection> {
    select_from_logliks_in(grid, logliks, 0)
}

fn select_from_logliks_in(grid: &CandidateGrid, logliks: Vec<f64>, dim: usize) -> Result<DimensionSelection> {
    if logliks.len() != grid.count() + 1 {
        return Err(MableError::DimensionMismatch {
            expected: grid.count() + 1,
            got: logliks.len(),
        });
    }
    let tau = changepoint_argmax_in(&logliks, dim)?;
    let statistics = changepoint_stats(&logliks)
        .into_iter()
        .map(|r| (r > f64::NEG_INFINITY).then_some(r))
        .collect();
    Ok(DimensionSelection {
        grid: *grid,
        logliks,
        statistics,
        tau,
        degree: grid.degree(tau),
    })
}

fn select_in(x: &[f64], grid: &CandidateGrid, config: &FitConfig, dim: usize) -> Result<DimensionSelection> {
    let logliks = profile_logliks(x, grid, config).map_err(|e| MableError::Selection {
        dim,
        reason: e.to_string(),
    })?;
    select_from_logliks_in(grid, logliks, dim)
}

/// Chooses the degree of a unit-interval marginal over `grid`.
pub fn select_degree(x: &[f64], grid: &CandidateGrid, config: &FitConfig) -> Result<DimensionSelection> {
    select_in(x, grid, config, 0)
}

/// Selects every dimension's degree independently from its marginal.
pub fn select_degrees(data: &Dataset, grids: &GridPolicy, config: &FitConfig) -> Result<DegreeSelection> {
    let d = data.dim();
    let grids: Vec<CandidateGrid> = match grids {
        GridPolicy::Explicit(g) => {
            if g.len() != d {
                return Err(MableError::DimensionMismatch {
                    expected: d,
                    got: g.len(),
                });
            }
            g.clone()
        }
        GridPolicy::Auto { start, count } => (0..d)
            .map(|j| {
                auto_grid(&data.column(j), *start, *count).map_err(|e| match e {
                    MableError::Selection { reason, .. } => MableError::Selection { dim: j, reason },
                    other => other,
                })
            })
            .collect::<Result<_>>()?,
    };
    let dimensions = grids
        .par_iter()
        .enumerate()
        .map(|(j, grid)| select_in(&data.column(j), grid, config, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(DegreeSelection { dimensions })
}
