//! Checks against closed forms, brute-force sums and Monte Carlo.

use approx::assert_relative_eq;
use mable::sim::{generate_counted, power88_model, run_rng, DegreePolicy};
use mable::{
    chisq_divergence, fit_fixed_degree, generate, ise, run_study, sample_model, select_degrees,
    BernsteinModel, Dataset, DegreeVector, FitConfig, GridPolicy, MixtureCoefficients, StudyConfig,
    SupportBox, TargetDistribution, TensorQuadrature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(d: usize) -> BernsteinModel {
    BernsteinModel::new(
        DegreeVector::new(vec![0; d]).unwrap(),
        MixtureCoefficients::new(vec![1.0]).unwrap(),
        SupportBox::unit(d).unwrap(),
    )
    .unwrap()
}

#[test]
fn chisq_matches_closed_form_and_riemann_sum() {
    // truth 1/2 + t against the uniform: int (1/2 - t)^2 / (1/2 + t) = ln 3 - 1
    let truth = |t: &[f64]| 0.5 + t[0];
    let q = TensorQuadrature::new(64, 1).unwrap();
    let got = chisq_divergence(&uniform(1), truth, &q).unwrap();
    assert_relative_eq!(got, 3f64.ln() - 1.0, max_relative = 1e-12);

    let cells = 200_000;
    let h = 1.0 / cells as f64;
    let riemann: f64 = (0..cells)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            (0.5 - t) * (0.5 - t) / (0.5 + t) * h
        })
        .sum();
    assert!((got - riemann).abs() < 1e-4);
}

#[test]
fn chisq_against_a_density_vanishing_at_the_edge_grows_with_resolution() {
    // (1 - 2t)^2 / (2t) ~ 1 / (2t) near 0: the integral diverges, so finer rules keep growing
    let truth = |t: &[f64]| 2.0 * t[0];
    let values: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&k| chisq_divergence(&uniform(1), truth, &TensorQuadrature::new(k, 1).unwrap()).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0] + 0.5), "{values:?}");
}

#[test]
fn uniform_ise_against_power88_matches_closed_form_and_monte_carlo() {
    let target = TargetDistribution::power88();
    let q = TensorQuadrature::new(32, 2).unwrap();
    let got = ise(&uniform(2), |x| target.density(x), &q).unwrap();
    // int f^2 - 1 with f = 4.5 (x^8 + y^8)
    let exact = 20.25 * (2.0 / 17.0 + 2.0 / 81.0) - 1.0;
    assert_relative_eq!(got, exact, max_relative = 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let draws = 10_000_000;
    let mc: f64 = (0..draws)
        .map(|_| {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let e = 1.0 - target.density(&x);
            e * e
        })
        .sum::<f64>()
        / draws as f64;
    assert_relative_eq!(got, mc, max_relative = 5e-3);
}

#[test]
fn power88_exact_model_is_the_target() {
    let target = TargetDistribution::power88();
    let model = power88_model();
    for i in 0..=10 {
        for j in 0..=10 {
            let x = [i as f64 / 10.0, j as f64 / 10.0];
            assert_relative_eq!(model.density(&x).unwrap(), target.density(&x), max_relative = 1e-12);
        }
    }
}

#[test]
fn generators_have_the_right_moments() {
    let n = 200_000;
    let mean = |d: &Dataset, j: usize| d.rows().map(|r| r[j]).sum::<f64>() / d.n() as f64;

    let beta = generate(&TargetDistribution::beta(), n, 1).unwrap();
    assert!((mean(&beta, 0) - 0.5).abs() < 3e-3);
    assert!((mean(&beta, 1) - 0.5).abs() < 3e-3);

    // x^8 mixed with the uniform in the other coordinate: (9/10 + 1/2) / 2
    let p88 = generate(&TargetDistribution::power88(), n, 2).unwrap();
    assert!((mean(&p88, 0) - 0.7).abs() < 3e-3);
    assert!((mean(&p88, 1) - 0.7).abs() < 3e-3);

    let target = TargetDistribution::normal();
    let (normal, attempts) = generate_counted(&target, n, &mut run_rng(3, 0)).unwrap();
    let rejected = 1.0 - n as f64 / attempts as f64;
    assert!(rejected <= 0.01, "rejection rate {rejected}");

    for (name, target) in [
        ("beta", TargetDistribution::beta()),
        ("normal", TargetDistribution::normal()),
        ("mixture", TargetDistribution::mixture_normal()),
        ("p88", TargetDistribution::power88()),
    ] {
        let d = generate(&target, 20_000, 4).unwrap();
        assert!(d.rows().all(|r| r.iter().all(|v| (0.0..=1.0).contains(v))), "{name}");
    }
    assert!(normal.rows().all(|r| r.iter().all(|v| (0.0..=1.0).contains(v))));
}

#[test]
fn sampling_follows_the_model_cdf() {
    let degrees = DegreeVector::new(vec![5]).unwrap();
    let p = MixtureCoefficients::new(vec![0.05, 0.3, 0.1, 0.05, 0.2, 0.3]).unwrap();
    let model = BernsteinModel::new(degrees, p, SupportBox::new(vec![-2.0], vec![3.0]).unwrap()).unwrap();
    let n = 20_000;
    let mut xs: Vec<f64> = sample_model(&model, n, 7).unwrap().into_iter().map(|r| r[0]).collect();
    xs.sort_by(f64::total_cmp);
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = model.cdf(&[*x]).unwrap();
            (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    // 1.63 / sqrt(n) is the 1% critical value
    assert!(ks < 1.63 / (n as f64).sqrt(), "KS distance {ks}");
}

#[test]
fn fit_recovers_a_single_component() {
    // Beta(2, 2) is component 1 of degree 2
    let model = BernsteinModel::new(
        DegreeVector::new(vec![2]).unwrap(),
        MixtureCoefficients::new(vec![0.0, 1.0, 0.0]).unwrap(),
        SupportBox::unit(1).unwrap(),
    )
    .unwrap();
    let data = Dataset::new(sample_model(&model, 2000, 21).unwrap()).unwrap();
    let (p, report) = fit_fixed_degree(model.degrees(), &data, &FitConfig::default()).unwrap();
    assert!(report.converged);
    assert!(p.as_slice()[1] >= 0.9, "{:?}", p.as_slice());
}

#[test]
fn studies_are_reproducible() {
    let mut config = StudyConfig::new(60, 4, 99);
    config.degrees = DegreePolicy::Fixed(DegreeVector::new(vec![4, 4]).unwrap());
    let target = TargetDistribution::mixture_normal();
    let a = run_study(&target, &config).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| run_study(&target, &config).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.records.len(), 4);
}

#[test]
fn power88_selection_lands_near_the_true_degree() {
    // the target is exactly a degree-(8, 8) mixture; at n = 200 the selector settles lower
    let target = TargetDistribution::power88();
    let runs = 10;
    let mut total = [0.0; 2];
    for run in 0..runs {
        let data = generate(&target, 200, 500 + run).unwrap();
        let sel = select_degrees(&data, &GridPolicy::default(), &FitConfig::default()).unwrap();
        for (t, dim) in total.iter_mut().zip(&sel.dimensions) {
            *t += dim.degree as f64;
        }
    }
    for t in total {
        let mean = t / runs as f64;
        assert!((mean - 5.95).abs() <= 2.0, "mean selected degree {mean}");
    }
}
