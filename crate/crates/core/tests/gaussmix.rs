use rand::Rng as _;
use uic_core::gaussmix::{two_cluster_mixtures, RiskMethod};
use uic_core::rng;
use uic_core::{Gaussian, GaussianMixture, Label, LinearClassifier, LossSpec, Task};

fn mix_1d(weights: &[f64], means: &[f64], vars: &[f64]) -> GaussianMixture {
    GaussianMixture::new(
        weights.to_vec(),
        means
            .iter()
            .zip(vars)
            .map(|(m, v)| Gaussian::new(vec![*m], vec![vec![*v]]).unwrap())
            .collect(),
    )
    .unwrap()
}

fn normal_pdf_2d_diag(x: [f64; 2], mean: [f64; 2], var: [f64; 2]) -> f64 {
    let q = (x[0] - mean[0]).powi(2) / var[0] + (x[1] - mean[1]).powi(2) / var[1];
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * (var[0] * var[1]).sqrt())
}

#[test]
fn density_integrates_to_one() {
    let m = mix_1d(&[0.2, 0.5, 0.3], &[-3.0, 0.0, 4.0], &[0.5, 1.0, 2.5]);
    let h = 1e-3;
    let total: f64 = (0..40_000)
        .map(|i| m.density(&[-20.0 + h * (i as f64 + 0.5)]).unwrap() * h)
        .sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    let two = mix_1d(&[0.5, 0.5], &[-1.0, 1.0], &[1.0, 1.0]);
    assert!((two.density(&[0.0]).unwrap() - 0.241_970_724_519_143_37).abs() < 1e-15);
    assert!(m.density(&[0.0, 1.0]).is_err());
}

#[test]
fn preset_posterior_matches_hand_evaluation() {
    let (p, q) = two_cluster_mixtures();
    let pi = 1.0 / 501.0;
    let task = Task::new(pi, p, q, LossSpec::ce()).unwrap();
    let x = [0.0, 0.0];
    let pd =
        0.5 * normal_pdf_2d_diag(x, [-2.0, 2.0], [0.5, 5.0]) + 0.5 * normal_pdf_2d_diag(x, [-2.0, -2.0], [5.0, 0.5]);
    let qd = 0.5 * normal_pdf_2d_diag(x, [2.0, 2.0], [1.0, 1.0]) + 0.5 * normal_pdf_2d_diag(x, [2.0, -2.0], [1.0, 1.0]);
    let expect = pi * pd / (pi * pd + (1.0 - pi) * qd);
    let eta = task.posterior_eta(&x).unwrap();
    assert!((eta / expect - 1.0).abs() < 1e-12, "{eta} vs {expect}");
}

#[test]
fn posterior_odds_are_prior_odds_times_likelihood_ratio() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::with_rho(1e-6, p.clone(), q.clone(), LossSpec::ce()).unwrap();
    let mut r = rng::stream(5, 0);
    for _ in 0..200 {
        let x = [r.random_range(-8.0..8.0), r.random_range(-8.0..8.0)];
        let eta = task.posterior_eta(&x).unwrap();
        let lhs = task.log_odds(&x).unwrap();
        let rhs = task.rho.ln() + p.log_density(&x).unwrap() - q.log_density(&x).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
        // 1 - η loses digits once η is near 1
        if eta > 1e-300 && eta < 0.5 {
            assert!(
                ((eta / (1.0 - eta)).ln() - rhs).abs() < 1e-8 * (1.0 + rhs.abs()),
                "{x:?} {eta} {rhs}"
            );
        }
    }
}

#[test]
fn posterior_is_linear_in_small_pi() {
    let m = |mu: f64| mix_1d(&[1.0], &[mu], &[1.0]);
    let x = [0.4];
    let eta = |pi: f64| {
        Task::new(pi, m(1.0), m(-1.0), LossSpec::ce())
            .unwrap()
            .posterior_eta(&x)
            .unwrap()
    };
    let r = eta(1e-6) / eta(1e-7);
    assert!((r - 10.0).abs() < 1e-4, "{r}");
}

#[test]
fn samples_follow_the_mixture_cdf() {
    let m = mix_1d(&[0.3, 0.7], &[-2.0, 1.5], &[0.5, 2.0]);
    let mut r = rng::stream(17, 0);
    let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(&mut r)[0]).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = m.cdf_1d(*x).unwrap();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS = {ks}");
}

#[test]
fn sample_mean_obeys_the_clt_bound() {
    let mu = [0.7, -1.3, 2.0];
    let g = Gaussian::new(
        mu.to_vec(),
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    )
    .unwrap();
    let mut r = rng::stream(23, 0);
    let n = 1_000_000;
    let mut sum = [0.0; 3];
    for _ in 0..n {
        for (s, v) in sum.iter_mut().zip(g.sample(&mut r)) {
            *s += v;
        }
    }
    for (s, m) in sum.iter().zip(mu) {
        assert!((s / n as f64 - m).abs() < 4.0 / (n as f64).sqrt());
    }
}

#[test]
fn fixed_counts_and_bernoulli_labels() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(1.0 / 1001.0, p, q, LossSpec::ce()).unwrap();
    let d = task.sample_counts(200, 200_000, 1).unwrap();
    assert_eq!(d.count(Label::Positive), 200);
    assert_eq!(d.count(Label::Negative), 200_000);
    let again = task.sample_counts(200, 200_000, 1).unwrap();
    assert_eq!(d.samples(), again.samples());
    let balanced = task.with_loss(LossSpec::ce()).unwrap();
    let t = Task::new(0.2, balanced.minority, balanced.majority, LossSpec::ce()).unwrap();
    let s = t.sample(100_000, 9).unwrap();
    let frac = s.count(Label::Positive) as f64 / s.len() as f64;
    assert!((frac - 0.2).abs() < 4.0 * (0.2f64 * 0.8 / 1e5).sqrt(), "{frac}");
}

#[test]
fn constant_predictor_risk_is_ln2() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(0.01, p, q, LossSpec::ce()).unwrap();
    let r = task
        .population_risk(&LinearClassifier::zeros(2), RiskMethod::Quadrature { order: 64 })
        .unwrap();
    assert!((r.value - std::f64::consts::LN_2).abs() < 1e-14);
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let m = |mu: f64, v: f64| mix_1d(&[1.0], &[mu], &[v]);
    let task = Task::new(0.3, m(1.0, 1.0), m(-0.5, 2.0), LossSpec::square()).unwrap();
    let clf = LinearClassifier::new(vec![1.3], -0.4);
    let quad = task
        .population_risk(&clf, RiskMethod::Quadrature { order: 64 })
        .unwrap();
    let mc = task
        .population_risk(&clf, RiskMethod::MonteCarlo { n: 1_000_000, seed: 4 })
        .unwrap();
    // the error is the gap to the half-order rule, a loose upper bound
    assert!(quad.error < 1e-6, "{quad:?}");
    assert!((quad.value - mc.value).abs() < 3.0 * mc.error, "{quad:?} {mc:?}");

    let (p, q) = two_cluster_mixtures();
    for spec in [LossSpec::ce(), LossSpec::alpha(0.5), LossSpec::focal(2.0)] {
        let task = Task::new(0.05, p.clone(), q.clone(), spec).unwrap();
        let clf = LinearClassifier::new(vec![-0.8, 0.1], -1.0);
        let quad = task
            .population_risk(&clf, RiskMethod::Quadrature { order: 64 })
            .unwrap();
        let mc = task
            .population_risk(&clf, RiskMethod::MonteCarlo { n: 400_000, seed: 8 })
            .unwrap();
        assert!(
            (quad.value - mc.value).abs() < 3.0 * mc.error,
            "{} {quad:?} {mc:?}",
            spec.label()
        );
    }
}

#[test]
fn risk_ignores_component_order() {
    let (p, q) = two_cluster_mixtures();
    let flip = |m: &GaussianMixture| {
        GaussianMixture::new(
            m.weights().iter().rev().copied().collect(),
            m.components().iter().rev().cloned().collect(),
        )
        .unwrap()
    };
    let a = Task::new(0.02, p.clone(), q.clone(), LossSpec::vs(0.5)).unwrap();
    let b = Task::new(0.02, flip(&p), flip(&q), LossSpec::vs(0.5)).unwrap();
    let clf = LinearClassifier::new(vec![-1.1, 0.4], -2.0);
    let ra = a
        .population_risk(&clf, RiskMethod::Quadrature { order: 48 })
        .unwrap()
        .value;
    let rb = b
        .population_risk(&clf, RiskMethod::Quadrature { order: 48 })
        .unwrap()
        .value;
    assert!((ra - rb).abs() < 1e-14 * ra);
}

#[test]
fn monte_carlo_gradient_matches_common_random_number_differences() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(0.05, p, q, LossSpec::focal(1.0)).unwrap();
    let clf = LinearClassifier::new(vec![-0.7, 0.2], -0.5);
    let n = 1_000_000;
    let g = task.population_risk_grad(&clf, n, 31).unwrap().grad;
    let theta = clf.params();
    let h = 1e-5;
    let fd: Vec<f64> = (0..theta.len())
        .map(|j| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            let v = |t: &[f64]| {
                task.population_risk(
                    &LinearClassifier::from_params(t),
                    RiskMethod::MonteCarlo { n, seed: 31 },
                )
                .unwrap()
                .value
            };
            (v(&up) - v(&dn)) / (2.0 * h)
        })
        .collect();
    let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(err < 1e-3 * scale, "{g:?} vs {fd:?}");
}

#[test]
fn quadrature_is_limited_to_two_dimensions() {
    let g = Gaussian::standard(3);
    let task = Task::new(
        0.1,
        GaussianMixture::single(g.clone()),
        GaussianMixture::single(g),
        LossSpec::ce(),
    )
    .unwrap();
    let clf = LinearClassifier::zeros(3);
    assert!(task
        .population_risk(&clf, RiskMethod::Quadrature { order: 16 })
        .is_err());
    assert!(task
        .population_risk(&clf, RiskMethod::MonteCarlo { n: 1000, seed: 0 })
        .is_ok());
}
