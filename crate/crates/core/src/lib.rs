//! Maximum approximate Bernstein likelihood estimation of multivariate
//! densities and distribution functions on box supports.
//!
//! A density on a box `[a, b]` is mapped to the unit cube and modeled as a
//! mixture of products of beta densities (a Bernstein polynomial with
//! nonnegative, normalized coefficients). The mixture weights are fitted by
//! EM for a given degree vector, and each degree is chosen from the marginal
//! profile log-likelihoods by an exponential change-point statistic.

// `!(x > 0.0)` is used on purpose throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod em;
pub mod error;
pub mod persist;
pub mod quadrature;
pub mod select;
pub mod sim;
pub mod transform;

pub use bernstein::{
    beta_cdf, beta_log_density, cdf_eval, chisq_divergence, classical_bernstein_operator,
    density_eval, log_basis_row, log_sum_exp, sample_model, BernsteinModel, DegreeVector,
    MixtureCoefficients, MultiIndex, SupportBox,
};
pub use em::{
    em_step, fit_fixed_degree, log_likelihood, CacheMode, Dataset, FitConfig, FitReport, Init,
};
pub use error::{MableError, Result};
pub use quadrature::{GaussLegendre, TensorQuadrature};
pub use select::{
    changepoint_argmax, changepoint_stat, changepoint_stats, min_degree_bound, profile_logliks,
    select_degree, select_degrees, select_from_logliks, auto_grid, CandidateGrid, DegreeSelection,
    DimensionSelection, GridPolicy, GridStart,
};
pub use sim::{generate, ise, run_study, StudyConfig, StudyResult, TargetDistribution};
pub use transform::{auto_box, density_back_transform, from_unit, to_unit};

/// Path of the bundled Old Faithful data file.
pub fn old_faithful_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/old_faithful.csv")
}
