use uic_core::gaussmix::two_cluster_mixtures;
use uic_core::loss::margin_loss_value;
use uic_core::train::{
    decision_boundary_2d, fit_linear, logit_offset, objective_gradient, Init, Objective, Optimizer, TrainConfig,
};
use uic_core::{Dataset, Gaussian, GaussianMixture, Label, LinearClassifier, Link, LossSpec, Task};

fn normal_2d(mean: [f64; 2]) -> GaussianMixture {
    GaussianMixture::single(Gaussian::new(mean.to_vec(), vec![vec![1.0, 0.3], vec![0.3, 1.5]]).unwrap())
}

fn newton() -> TrainConfig {
    TrainConfig {
        optimizer: Optimizer::Newton { tol: 1e-10 },
        epochs: 200,
        init: Init::LogitAdjusted,
        ..TrainConfig::default()
    }
}

fn mean_loss(data: &Dataset, spec: &LossSpec, theta: &[f64]) -> f64 {
    let clf = LinearClassifier::from_params(theta);
    data.iter()
        .map(|s| margin_loss_value(spec, s.y, clf.margin(&s.x)).unwrap())
        .sum::<f64>()
        / data.len() as f64
}

#[test]
fn full_batch_gradient_matches_finite_differences() {
    let task = Task::new(0.2, normal_2d([1.0, 0.5]), normal_2d([-1.0, 0.0]), LossSpec::ce()).unwrap();
    let data = task.sample(300, 4).unwrap();
    let clf = LinearClassifier::new(vec![0.7, -0.4], -0.3);
    for spec in [
        LossSpec::ce(),
        LossSpec::focal(2.0),
        LossSpec::poly(1.0),
        LossSpec::vs(0.4),
        LossSpec::alpha(0.6),
        LossSpec::tbl(0.5, 1.0),
    ] {
        let (value, g) = objective_gradient(&data, &spec, Link::Logistic, &clf).unwrap();
        let theta = clf.params();
        assert!((value - mean_loss(&data, &spec, &theta)).abs() < 1e-12);
        for j in 0..theta.len() {
            let h = 1e-6;
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (mean_loss(&data, &spec, &up) - mean_loss(&data, &spec, &dn)) / (2.0 * h);
            assert!(
                (g[j] - fd).abs() / (1.0 + g[j].abs()) < 1e-5,
                "{} j={j}: {} vs {fd}",
                spec.label(),
                g[j]
            );
        }
    }
}

/// Full-batch gradient descent on cross entropy with the margin shifted by
/// `offset`, started from zero.
fn logit_adjusted_gd(data: &Dataset, offset: f64, lr: f64, epochs: usize) -> Vec<f64> {
    let spec = LossSpec::ce();
    let n = data.len() as f64;
    let mut theta = vec![0.0; data.dim() + 1];
    for _ in 0..epochs {
        let clf = LinearClassifier::from_params(&theta);
        let mut g = vec![0.0; theta.len()];
        for s in data.iter() {
            let d1 = spec.margin_derivs(Link::Logistic, s.y, clf.margin(&s.x) + offset).d1 / n;
            for (gj, xj) in g.iter_mut().zip(s.x.iter().chain(std::iter::once(&1.0))) {
                *gj += d1 * xj;
            }
        }
        for (t, gj) in theta.iter_mut().zip(&g) {
            *t -= lr * gj;
        }
    }
    theta
}

#[test]
fn logit_adjusted_init_matches_logit_adjusted_loss() {
    let pi = 0.05;
    let task = Task::new(pi, normal_2d([1.5, 1.0]), normal_2d([-0.5, 0.0]), LossSpec::ce()).unwrap();
    let data = task.sample_counts(40, 760, 12).unwrap();
    let cfg = TrainConfig {
        optimizer: Optimizer::FullBatchGd { lr: 0.5 },
        epochs: 300,
        init: Init::LogitAdjusted,
        ..TrainConfig::default()
    };
    let fit = fit_linear(Objective::Empirical(&data), &LossSpec::ce(), &cfg)
        .unwrap()
        .classifier;
    let b0 = logit_offset(pi).unwrap();
    let calibrated = LinearClassifier::new(fit.w.clone(), fit.b - b0);
    let oracle = LinearClassifier::from_params(&logit_adjusted_gd(&data, b0, 0.5, 300));
    assert!(calibrated.angle_to(&oracle) < 1.0);
    assert!((calibrated.b - oracle.b).abs() < 1e-2, "{calibrated:?} {oracle:?}");
    assert!((b0 - (pi / (1.0 - pi)).ln()).abs() < 1e-15);
}

#[test]
fn population_and_empirical_fits_agree() {
    let task = Task::new(0.2, normal_2d([1.0, 1.0]), normal_2d([-1.0, 0.0]), LossSpec::ce()).unwrap();
    let pop = fit_linear(
        Objective::Population {
            task: &task,
            mc_n: 1_000_000,
        },
        &task.loss,
        &newton(),
    )
    .unwrap();
    let data = task.sample(1_000_000, 1).unwrap();
    let emp = fit_linear(Objective::Empirical(&data), &task.loss, &newton()).unwrap();
    let angle = pop.classifier.angle_to(&emp.classifier);
    assert!(angle < 1.0, "{angle}");
    // exact minimizer for equal covariances: w = Σ⁻¹Δμ, b from the prior
    let s = nalgebra::Matrix2::new(1.0, 0.3, 0.3, 1.5);
    let w = s.try_inverse().unwrap() * nalgebra::Vector2::new(2.0, 1.0);
    let exact = LinearClassifier::new(vec![w[0], w[1]], 0.0);
    assert!(pop.classifier.angle_to(&exact) < 1.0);
}

#[test]
fn alpha_boundary_leans_toward_minority_spread() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(1.0 / 1001.0, p.clone(), q, LossSpec::ce()).unwrap();
    let data = task.sample_counts(200, 200_000, 0).unwrap();
    let ce = fit_linear(Objective::Empirical(&data), &LossSpec::ce(), &newton())
        .unwrap()
        .classifier;
    let al = fit_linear(Objective::Empirical(&data), &LossSpec::alpha(0.5), &newton())
        .unwrap()
        .classifier;
    let cov = p.total_covariance();
    let lead = cov.symmetric_eigen();
    let k = lead.eigenvalues.imax();
    let v = lead.eigenvectors.column(k);
    let proj = |c: &LinearClassifier| {
        let n = (c.w[0].powi(2) + c.w[1].powi(2)).sqrt();
        ((c.w[0] * v[0] + c.w[1] * v[1]) / n).abs()
    };
    assert!(ce.angle_to(&al) > 1.0);
    assert!(proj(&al) > proj(&ce), "{al:?} {ce:?}");
}

#[test]
fn tail_insensitive_losses_share_a_boundary() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(1.0 / 501.0, p, q, LossSpec::ce()).unwrap();
    let data = task.sample_counts(200, 100_000, 2).unwrap();
    let specs = [
        LossSpec::ce(),
        LossSpec::focal(0.5),
        LossSpec::focal(2.0),
        LossSpec::poly(-0.5),
        LossSpec::poly(1.0),
        LossSpec::vs(0.5),
        LossSpec::vs(0.8),
    ];
    let fits: Vec<LinearClassifier> = specs
        .iter()
        .map(|s| {
            fit_linear(Objective::Empirical(&data), s, &newton())
                .unwrap()
                .classifier
        })
        .collect();
    for (i, a) in fits.iter().enumerate() {
        for (j, b) in fits.iter().enumerate().skip(i + 1) {
            assert!(
                a.angle_to(b) < 3.0,
                "{} vs {}: {}",
                specs[i].label(),
                specs[j].label(),
                a.angle_to(b)
            );
        }
    }
}

#[test]
fn boundary_points_lie_on_the_line() {
    let clf = LinearClassifier::new(vec![1.0, 0.0], -2.0);
    for pt in decision_boundary_2d(&clf, (-5.0, 5.0), 11).unwrap() {
        assert_eq!(pt[0], 2.0);
    }
    let diag = LinearClassifier::new(vec![1.0, 1.0], 0.0);
    for pt in decision_boundary_2d(&diag, (-5.0, 5.0), 11).unwrap() {
        assert_eq!(pt[1], -pt[0]);
    }
    let odd = LinearClassifier::new(vec![-0.37, 2.9], 1.3);
    for pt in decision_boundary_2d(&odd, (-5.0, 5.0), 101).unwrap() {
        assert!(odd.margin(&pt).abs() < 1e-9);
    }
    assert!(decision_boundary_2d(&LinearClassifier::zeros(2), (-1.0, 1.0), 5).is_err());
}

#[test]
fn divergence_aborts_training() {
    let (p, q) = two_cluster_mixtures();
    let task = Task::new(1.0 / 501.0, p, q, LossSpec::ce()).unwrap();
    let data = task.sample_counts(200, 20_000, 0).unwrap();
    let cfg = TrainConfig {
        optimizer: Optimizer::Sgd { lr: 1.0, momentum: 0.9 },
        epochs: 5,
        init: Init::LogitAdjusted,
        ..TrainConfig::default()
    };
    let err = fit_linear(Objective::Empirical(&data), &LossSpec::alpha(0.3), &cfg).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert!(data.count(Label::Positive) == 200);
}
