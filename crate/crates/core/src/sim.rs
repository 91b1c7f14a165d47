//! Monte Carlo study of the estimator on the four bivariate test targets.
//!
//! Targets on `[0, 1]^2`:
//!
//! - `beta`: independent `Beta(7, 7)` and `Beta(5, 5)` coordinates;
//! - `normal`: bivariate normal, mean `(0.5, 0.5)`, covariance
//!   `0.125^2 [[1, 0.1], [0.1, 1]]`, truncated to the square;
//! - `mn`: `0.3 N((0.3, 0.3), 0.065^2 I) + 0.7 N((0.7, 0.7), 0.065^2 I)`,
//!   truncated to the square;
//! - `p88`: power density `4.5 (x_1^8 + x_2^8)`.
//!
//! Truncated targets are renormalized by their in-square mass so that ISE
//! is always measured against a proper density on the square.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{
    sample_model_with_rng, BernsteinModel, DegreeVector, DensityEvaluator, MixtureCoefficients,
    SupportBox,
};
use crate::em::{fit_fixed_degree, Dataset, FitConfig};
use crate::error::{MableError, Result};
use crate::quadrature::TensorQuadrature;
use crate::select::{select_degrees, GridPolicy};

/// Nodes per axis of the ISE quadrature.
pub const DEFAULT_ISE_NODES: usize = 128;

const MIN_ACCEPTANCE: f64 = 1e-3;
const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Bivariate normal component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Gaussian2 {
    fn cholesky(&self) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [_, c]] = self.cov;
        if !(a > 0.0) {
            return Err(MableError::InvalidConfig("covariance is not positive definite".into()));
        }
        let l11 = a.sqrt();
        let l21 = b / l11;
        let rem = c - l21 * l21;
        if !(rem > 0.0) {
            return Err(MableError::InvalidConfig("covariance is not positive definite".into()));
        }
        Ok([[l11, 0.0], [l21, rem.sqrt()]])
    }

    fn density(&self, x: &[f64]) -> f64 {
        let [[a, b], [_, c]] = self.cov;
        let det = a * c - b * b;
        let (u, v) = (x[0] - self.mean[0], x[1] - self.mean[1]);
        let q = (c * u * u - 2.0 * b * u * v + a * v * v) / det;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    }

    fn sample<R: Rng + ?Sized>(&self, chol: &[[f64; 2]; 2], rng: &mut R) -> [f64; 2] {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        [
            self.mean[0] + chol[0][0] * z1,
            self.mean[1] + chol[1][0] * z1 + chol[1][1] * z2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetKind {
    BetaProduct { shapes: [[f64; 2]; 2] },
    TruncatedNormal { component: Gaussian2 },
    NormalMixture { weights: Vec<f64>, components: Vec<Gaussian2> },
    Power88,
    #[serde(skip)]
    UserModel(BernsteinModel),
}

/// A test distribution on the unit square with its exact density.
#[derive(Debug, Clone)]
pub struct TargetDistribution {
    kind: TargetKind,
    name: String,
    /// Probability mass of the untruncated law inside the square.
    in_box_mass: f64,
    beta_norm: [f64; 2],
}

fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl TargetDistribution {
    pub fn new(name: impl Into<String>, kind: TargetKind) -> Result<Self> {
        let mut beta_norm = [0.0; 2];
        match &kind {
            TargetKind::BetaProduct { shapes } => {
                for (j, [a, b]) in shapes.iter().enumerate() {
                    if !(*a > 0.0 && *b > 0.0) {
                        return Err(MableError::InvalidConfig(format!(
                            "beta shapes must be positive, got ({a}, {b})"
                        )));
                    }
                    beta_norm[j] = -ln_beta(*a, *b);
                }
            }
            TargetKind::TruncatedNormal { component } => {
                component.cholesky()?;
            }
            TargetKind::NormalMixture { weights, components } => {
                if weights.len() != components.len() || weights.is_empty() {
                    return Err(MableError::InvalidConfig(
                        "mixture needs one weight per component".into(),
                    ));
                }
                MixtureCoefficients::new(weights.clone())?;
                for c in components {
                    c.cholesky()?;
                }
            }
            TargetKind::UserModel(model) => {
                if model.dim() != 2 {
                    return Err(MableError::DimensionMismatch {
                        expected: 2,
                        got: model.dim(),
                    });
                }
            }
            TargetKind::Power88 => {}
        }
        let mut target = Self {
            kind,
            name: name.into(),
            in_box_mass: 1.0,
            beta_norm,
        };
        let quad = TensorQuadrature::new(DEFAULT_ISE_NODES, 2)?;
        let mass = quad.integrate(|x| target.raw_density(x));
        if matches!(
            target.kind,
            TargetKind::TruncatedNormal { .. } | TargetKind::NormalMixture { .. }
        ) {
            target.in_box_mass = mass;
        } else if (mass - 1.0).abs() > 1e-6 {
            return Err(MableError::InvalidConfig(format!(
                "target density integrates to {mass} over the unit square"
            )));
        }
        let total = quad.integrate(|x| target.density(x));
        if (total - 1.0).abs() > 1e-6 {
            return Err(MableError::InvalidConfig(format!(
                "target density integrates to {total} over the unit square"
            )));
        }
        Ok(target)
    }

    /// Independent `Beta(7, 7)` x `Beta(5, 5)`.
    pub fn beta() -> Self {
        Self::new("Beta", TargetKind::BetaProduct { shapes: [[7.0, 7.0], [5.0, 5.0]] })
            .expect("built-in target is valid")
    }

    pub fn normal() -> Self {
        let s = 0.125 * 0.125;
        Self::new(
            "Normal",
            TargetKind::TruncatedNormal {
                component: Gaussian2 {
                    mean: [0.5, 0.5],
                    cov: [[s, 0.1 * s], [0.1 * s, s]],
                },
            },
        )
        .expect("built-in target is valid")
    }

    pub fn mixture_normal() -> Self {
        let s = 0.065 * 0.065;
        let cov = [[s, 0.0], [0.0, s]];
        Self::new(
            "MN",
            TargetKind::NormalMixture {
                weights: vec![0.3, 0.7],
                components: vec![
                    Gaussian2 { mean: [0.3, 0.3], cov },
                    Gaussian2 { mean: [0.7, 0.7], cov },
                ],
            },
        )
        .expect("built-in target is valid")
    }

    pub fn power88() -> Self {
        Self::new("P(8,8)", TargetKind::Power88).expect("built-in target is valid")
    }

    pub fn user(model: BernsteinModel) -> Result<Self> {
        let unit = model.with_support(SupportBox::unit(model.dim())?)?;
        Self::new("UserModel", TargetKind::UserModel(unit))
    }

    /// Looks up a built-in target by its command-line name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "beta" => Some(Self::beta()),
            "normal" => Some(Self::normal()),
            "mn" => Some(Self::mixture_normal()),
            "p88" => Some(Self::power88()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn in_box_mass(&self) -> f64 {
        self.in_box_mass
    }

    fn raw_density(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TargetKind::BetaProduct { shapes } => shapes
                .iter()
                .zip(x)
                .zip(&self.beta_norm)
                .map(|(([a, b], &t), norm)| {
                    let lt = if *a == 1.0 { 0.0 } else { (a - 1.0) * t.ln() };
                    let l1t = if *b == 1.0 { 0.0 } else { (b - 1.0) * (-t).ln_1p() };
                    (norm + lt + l1t).exp()
                })
                .product(),
            TargetKind::TruncatedNormal { component } => component.density(x),
            TargetKind::NormalMixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.density(x))
                .sum(),
            TargetKind::Power88 => 4.5 * (x[0].powi(8) + x[1].powi(8)),
            TargetKind::UserModel(model) => model.unit_density(x).unwrap_or(0.0),
        }
    }

    /// Exact density on `[0, 1]^2`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.raw_density(x) / self.in_box_mass
    }

    /// Exact Bernstein representation, where the target has one.
    pub fn exact_model(&self) -> Option<BernsteinModel> {
        match &self.kind {
            TargetKind::Power88 => Some(power88_model()),
            TargetKind::UserModel(model) => Some(model.clone()),
            TargetKind::BetaProduct { shapes } => {
                // Beta(i + 1, m - i + 1) is itself a basis element for integer shapes.
                let mut degrees = Vec::new();
                let mut idx = Vec::new();
                for [a, b] in shapes {
                    if a.fract() != 0.0 || b.fract() != 0.0 {
                        return None;
                    }
                    let (a, b) = (*a as usize, *b as usize);
                    degrees.push(a + b - 2);
                    idx.push(a - 1);
                }
                let degrees = DegreeVector::new(degrees).ok()?;
                let rank = degrees.rank(&idx).ok()?;
                let p = MixtureCoefficients::point_mass(degrees.component_count(), rank).ok()?;
                BernsteinModel::new(degrees, p, SupportBox::unit(2).ok()?).ok()
            }
            _ => None,
        }
    }
}

/// `4.5 (x^8 + y^8)` as a degree-(8, 8) mixture: `p(8, j) = p(i, 8) = 1/18`
/// off the corner and `p(8, 8) = 1/9`.
pub fn power88_model() -> BernsteinModel {
    let degrees = DegreeVector::new(vec![8, 8]).expect("valid degrees");
    let mut w = vec![0.0; 81];
    for j in 0..9 {
        w[degrees.rank(&[8, j]).expect("in range")] += 1.0 / 18.0;
        w[degrees.rank(&[j, 8]).expect("in range")] += 1.0 / 18.0;
    }
    let p = MixtureCoefficients::normalized(w).expect("nonnegative weights");
    BernsteinModel::new(degrees, p, SupportBox::unit(2).expect("valid box")).expect("consistent model")
}

/// Draws `n` points and reports how many proposals were made.
pub fn generate_counted<R: Rng + ?Sized>(
    target: &TargetDistribution,
    n: usize,
    rng: &mut R,
) -> Result<(Dataset, usize)> {
    if n == 0 {
        return Err(MableError::InvalidConfig("sample size must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n);
    let mut attempts = 0usize;
    match &target.kind {
        TargetKind::BetaProduct { shapes } => {
            let dists = shapes
                .iter()
                .map(|[a, b]| Beta::new(*a, *b).map_err(|e| MableError::Sampling(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..n {
                rows.push(dists.iter().map(|d| d.sample(rng)).collect());
            }
            attempts = n;
        }
        TargetKind::Power88 => {
            let edge = Beta::new(9.0, 1.0).map_err(|e| MableError::Sampling(e.to_string()))?;
            for _ in 0..n {
                let a: f64 = edge.sample(rng);
                let u: f64 = rng.random();
                rows.push(if rng.random::<bool>() { vec![a, u] } else { vec![u, a] });
            }
            attempts = n;
        }
        TargetKind::UserModel(model) => {
            rows = sample_model_with_rng(model, n, rng)?;
            attempts = n;
        }
        TargetKind::TruncatedNormal { component } => {
            let chol = component.cholesky()?;
            while rows.len() < n {
                attempts += 1;
                let x = component.sample(&chol, rng);
                accept(&mut rows, x, attempts)?;
            }
        }
        TargetKind::NormalMixture { weights, components } => {
            let chols = components
                .iter()
                .map(Gaussian2::cholesky)
                .collect::<Result<Vec<_>>>()?;
            while rows.len() < n {
                attempts += 1;
                let u: f64 = rng.random();
                let mut c = 0;
                let mut acc = weights[0];
                while u >= acc && c + 1 < weights.len() {
                    c += 1;
                    acc += weights[c];
                }
                let x = components[c].sample(&chols[c], rng);
                accept(&mut rows, x, attempts)?;
            }
        }
    }
    Ok((Dataset::new(rows)?, attempts))
}

fn accept(rows: &mut Vec<Vec<f64>>, x: [f64; 2], attempts: usize) -> Result<()> {
    if x.iter().all(|v| (0.0..=1.0).contains(v)) {
        rows.push(x.to_vec());
    }
    if attempts >= 1000 && (rows.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
        return Err(MableError::Sampling(format!(
            "acceptance rate {} / {attempts} is below {MIN_ACCEPTANCE}",
            rows.len()
        )));
    }
    Ok(())
}

/// `n` i.i.d. draws from `target`, deterministic in `seed`.
pub fn generate(target: &TargetDistribution, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_counted(target, n, &mut rng).map(|(d, _)| d)
}

/// Integrated squared error `int (f_m - f)^2` over the unit cube, with the
/// model read as a mixture density on the unit cube.
pub fn ise<F>(estimated: &BernsteinModel, truth: F, quadrature: &TensorQuadrature) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if quadrature.dim() != estimated.dim() {
        return Err(MableError::DimensionMismatch {
            expected: estimated.dim(),
            got: quadrature.dim(),
        });
    }
    let evaluator = DensityEvaluator::new(estimated);
    quadrature.try_integrate(|x| {
        let e = evaluator.unit_density(x)? - truth(x);
        Ok(e * e)
    })
}

/// How each run picks its degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreePolicy {
    Select(GridPolicy),
    Fixed(DegreeVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
    pub degrees: DegreePolicy,
    pub fit: FitConfig,
    pub ise_nodes: usize,
}

impl StudyConfig {
    pub fn new(n: usize, runs: usize, seed: u64) -> Self {
        Self {
            n,
            runs,
            seed,
            degrees: DegreePolicy::Select(GridPolicy::default()),
            fit: FitConfig::default(),
            ise_nodes: DEFAULT_ISE_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub degrees: Vec<usize>,
    pub ise: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub format_version: u32,
    pub target: String,
    pub n: usize,
    pub runs: usize,
    pub failed_runs: usize,
    pub mean_degree: Vec<f64>,
    /// Absent with fewer than two successful runs.
    pub sd_degree: Option<Vec<f64>>,
    pub mise_x100: f64,
    pub records: Vec<RunRecord>,
    /// Wall-clock time; excluded from serialization so reruns are byte-identical.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl StudyResult {
    pub fn ise_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ise).collect()
    }
}

/// Random stream for one run: the master seed picks the key, the run index
/// the stream.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn one_run(
    target: &TargetDistribution,
    config: &StudyConfig,
    quad: &TensorQuadrature,
    run: usize,
) -> Result<RunRecord> {
    let mut rng = run_rng(config.seed, run);
    let (data, _) = generate_counted(target, config.n, &mut rng)?;
    let degrees = match &config.degrees {
        DegreePolicy::Fixed(d) => d.clone(),
        DegreePolicy::Select(grids) => select_degrees(&data, grids, &config.fit)?.degrees()?,
    };
    let (p, report) = fit_fixed_degree(&degrees, &data, &config.fit)?;
    let model = BernsteinModel::new(degrees.clone(), p, SupportBox::unit(2)?)?;
    let err = ise(&model, |x| target.density(x), quad)?;
    Ok(RunRecord {
        run,
        degrees: degrees.as_slice().to_vec(),
        ise: err,
        converged: report.converged,
    })
}

/// Runs the Monte Carlo study. Runs execute in parallel but are aggregated
/// in run order, so the result does not depend on scheduling.
pub fn run_study(target: &TargetDistribution, config: &StudyConfig) -> Result<StudyResult> {
    if config.runs == 0 {
        return Err(MableError::InvalidConfig("runs must be at least 1".into()));
    }
    if config.n == 0 {
        return Err(MableError::InvalidConfig("sample size must be positive".into()));
    }
    config.fit.validate()?;
    let start = Instant::now();
    let quad = TensorQuadrature::new(config.ise_nodes, 2)?;
    let outcomes: Vec<Result<RunRecord>> = (0..config.runs)
        .into_par_iter()
        .map(|run| one_run(target, config, &quad, run))
        .collect();
    let mut records = Vec::with_capacity(config.runs);
    let mut failed = 0;
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("run {run} failed: {e}");
                failed += 1;
            }
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * config.runs as f64 || records.is_empty() {
        return Err(MableError::StudyAborted {
            failed,
            runs: config.runs,
        });
    }
    let ok = records.len() as f64;
    let dim = records[0].degrees.len();
    let mean_degree: Vec<f64> = (0..dim)
        .map(|j| records.iter().map(|r| r.degrees[j] as f64).sum::<f64>() / ok)
        .collect();
    let sd_degree = (records.len() > 1).then(|| {
        (0..dim)
            .map(|j| {
                let ss: f64 = records
                    .iter()
                    .map(|r| (r.degrees[j] as f64 - mean_degree[j]).powi(2))
                    .sum();
                (ss / (ok - 1.0)).sqrt()
            })
            .collect()
    });
    let mise = records.iter().map(|r| r.ise).sum::<f64>() / ok;
    Ok(StudyResult {
        format_version: crate::persist::FORMAT_VERSION,
        target: target.name().to_string(),
        n: config.n,
        runs: config.runs,
        failed_runs: failed,
        mean_degree,
        sd_degree,
        mise_x100: 100.0 * mise,
        records,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn pair(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2}")).collect();
    format!("({})", parts.join(", "))
}

type Column = dyn Fn(&StudyResult) -> String;

/// Plain-text table with one column per result, grouped in blocks by `n`:
/// `E(m)`, `SD(m)` and `MISE(f_B)` (x100) rows.
pub fn format_table(results: &[StudyResult]) -> String {
    let mut ns: Vec<usize> = results.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut targets: Vec<&str> = Vec::new();
    for r in results {
        if !targets.contains(&r.target.as_str()) {
            targets.push(&r.target);
        }
    }
    let width = 18;
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "");
    for t in &targets {
        let _ = write!(out, "{t:>width$}");
    }
    out.push('\n');
    for n in ns {
        let _ = writeln!(out, "n = {n}");
        let cell = |t: &str, f: &Column| {
            results
                .iter()
                .find(|r| r.n == n && r.target == t)
                .map(f)
                .unwrap_or_else(|| "-".into())
        };
        let rows: [(&str, &Column); 3] = [
            ("E(m)", &|r| pair(&r.mean_degree)),
            ("SD(m)", &|r| r.sd_degree.as_deref().map(pair).unwrap_or_else(|| "-".into())),
            ("MISE(f_B)", &|r| format!("{:.3}", r.mise_x100)),
        ];
        for (label, f) in rows {
            let _ = write!(out, "{label:<12}");
            for t in &targets {
                let _ = write!(out, "{:>width$}", cell(t, f));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_targets_are_normalized() {
        for t in [
            TargetDistribution::beta(),
            TargetDistribution::normal(),
            TargetDistribution::mixture_normal(),
            TargetDistribution::power88(),
        ] {
            let q = TensorQuadrature::new(128, 2).unwrap();
            let total = q.integrate(|x| t.density(x));
            assert!((total - 1.0).abs() < 1e-6, "{}: {total}", t.name());
        }
    }

    #[test]
    fn truncation_correction_is_small() {
        // each axis loses 2 * Phi(-4) ~ 6.33e-5 at sigma = 0.125
        let lost = 1.0 - TargetDistribution::normal().in_box_mass();
        assert!(lost > 1.0e-4 && lost < 1.4e-4, "{lost}");
        assert!((1.0 - TargetDistribution::mixture_normal().in_box_mass()) < 1e-4);
    }

    #[test]
    fn lookup_by_name() {
        for name in ["beta", "normal", "mn", "p88"] {
            assert!(TargetDistribution::by_name(name).is_some());
        }
        assert!(TargetDistribution::by_name("gamma").is_none());
    }

    #[test]
    fn exact_models_match_densities() {
        for t in [TargetDistribution::beta(), TargetDistribution::power88()] {
            let m = t.exact_model().unwrap();
            for x in [[0.1, 0.2], [0.5, 0.5], [0.93, 0.4]] {
                let a = m.unit_density(&x).unwrap();
                let b = t.density(&x);
                assert!((a - b).abs() < 1e-10 * (1.0 + b), "{}: {a} vs {b}", t.name());
            }
        }
    }

    #[test]
    fn invalid_targets_rejected() {
        assert!(TargetDistribution::new("bad", TargetKind::BetaProduct { shapes: [[0.0, 1.0], [1.0, 1.0]] }).is_err());
        let singular = Gaussian2 { mean: [0.5, 0.5], cov: [[1.0, 1.0], [1.0, 1.0]] };
        assert!(TargetDistribution::new("bad", TargetKind::TruncatedNormal { component: singular }).is_err());
    }

    #[test]
    fn hopeless_rejection_sampling_errors() {
        let far = Gaussian2 { mean: [40.0, 40.0], cov: [[1.0, 0.0], [0.0, 1.0]] };
        let target = TargetDistribution {
            kind: TargetKind::TruncatedNormal { component: far },
            name: "far".into(),
            in_box_mass: 1.0,
            beta_norm: [0.0; 2],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_counted(&target, 10, &mut rng),
            Err(MableError::Sampling(_))
        ));
    }

    #[test]
    fn single_run_has_no_sd() {
        let mut cfg = StudyConfig::new(60, 1, 3);
        cfg.degrees = DegreePolicy::Fixed(DegreeVector::new(vec![3, 3]).unwrap());
        let r = run_study(&TargetDistribution::beta(), &cfg).unwrap();
        assert!(r.sd_degree.is_none());
        assert_eq!(r.records.len(), 1);
        assert!((r.mise_x100 - 100.0 * r.records[0].ise).abs() < 1e-15);
    }

    #[test]
    fn table_layout() {
        let r = StudyResult {
            format_version: 1,
            target: "Beta".into(),
            n: 100,
            runs: 2,
            failed_runs: 0,
            mean_degree: vec![11.79, 8.58],
            sd_degree: Some(vec![2.04, 1.79]),
            mise_x100: 7.403,
            records: vec![],
            elapsed_secs: 0.0,
        };
        let t = format_table(&[r]);
        assert!(t.contains("n = 100"));
        assert!(t.contains("(11.79, 8.58)"));
        assert!(t.contains("7.403"));
    }
}
