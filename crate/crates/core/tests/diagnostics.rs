use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use uic_core::diagnostics::{
    auc, brier, fit_newton, influence, metric_report, mixture_auc, partial_metrics, retrain_influence, roc_curve,
};
use uic_core::math::{norm2, std_normal_cdf};
use uic_core::{Dataset, Gaussian, GaussianMixture, Label, LabeledSample, LinearClassifier, LossSpec, Task};

fn gaussian_2d(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Gaussian {
    Gaussian::new(mean.to_vec(), cov.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn random_problem(r: &mut ChaCha20Rng, seed: u64) -> Dataset {
    let sep: f64 = r.random_range(1.0..2.0);
    let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let p = gaussian_2d([sep * t.cos(), sep * t.sin()], [[1.0, 0.2], [0.2, 1.0]]);
    let q = gaussian_2d([0.0, 0.0], [[1.2, -0.1], [-0.1, 0.8]]);
    let task = Task::new(
        0.3,
        GaussianMixture::single(p),
        GaussianMixture::single(q),
        LossSpec::ce(),
    )
    .unwrap();
    task.sample_counts(60, 140, seed).unwrap()
}

#[test]
fn auc_is_rank_invariant() {
    let mut r = ChaCha20Rng::seed_from_u64(1);
    let pos: Vec<f64> = (0..500).map(|_| r.random_range(-1.0..2.0)).collect();
    let neg: Vec<f64> = (0..800).map(|_| r.random_range(-2.0..1.0)).collect();
    let base = auc(&pos, &neg).unwrap();
    let f = |v: &f64| (3.0 * v).exp() + v.powi(3);
    let tp: Vec<f64> = pos.iter().map(f).collect();
    let tn: Vec<f64> = neg.iter().map(f).collect();
    assert_eq!(base, auc(&tp, &tn).unwrap());
    // brute-force Mann–Whitney count
    let mut wins = 0.0;
    for a in &pos {
        for b in &neg {
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    assert!((base - wins / (pos.len() * neg.len()) as f64).abs() < 1e-12);
}

#[test]
fn auc_matches_the_two_gaussian_formula() {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    let p = gaussian_2d([2.0, 0.0], id);
    let q = gaussian_2d([0.0, 0.0], id);
    let clf = LinearClassifier::new(vec![1.0, 0.0], 0.0);
    let mut r = ChaCha20Rng::seed_from_u64(9);
    let pos: Vec<f64> = (0..100_000).map(|_| clf.margin(&p.sample(&mut r))).collect();
    let neg: Vec<f64> = (0..100_000).map(|_| clf.margin(&q.sample(&mut r))).collect();
    let expect = std_normal_cdf(2f64.sqrt());
    assert!((auc(&pos, &neg).unwrap() - expect).abs() < 0.005);
    let m = mixture_auc(&clf.w, &GaussianMixture::single(p), &GaussianMixture::single(q)).unwrap();
    assert!((m - expect).abs() < 1e-15);
}

#[test]
fn random_scores_have_chance_partial_auc() {
    let mut total = 0.0;
    for seed in 0..10 {
        let mut r = ChaCha20Rng::seed_from_u64(100 + seed);
        let pos: Vec<f64> = (0..5_000).map(|_| r.random()).collect();
        let neg: Vec<f64> = (0..50_000).map(|_| r.random()).collect();
        let m = partial_metrics(&pos, &neg, 0.01, 0.001).unwrap();
        assert!((m.op_auc - 0.5).abs() < 0.1, "{m:?}");
        total += m.op_auc;
    }
    assert!((total / 10.0 - 0.5).abs() < 0.05);
}

#[test]
fn recall_grows_with_the_fpr_point() {
    let mut r = ChaCha20Rng::seed_from_u64(4);
    let pos: Vec<f64> = (0..2_000).map(|_| r.random_range(0.0..1.5)).collect();
    let neg: Vec<f64> = (0..20_000).map(|_| r.random_range(0.0..1.0)).collect();
    let recalls: Vec<f64> = [1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5]
        .iter()
        .map(|&f| partial_metrics(&pos, &neg, 0.01, f).unwrap().recall_at_fpr)
        .collect();
    assert!(recalls.windows(2).all(|w| w[1] >= w[0]), "{recalls:?}");
    let roc = roc_curve(&pos, &neg).unwrap();
    assert!(roc.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    assert!(partial_metrics(&pos, &neg, 0.01, 1e-5).unwrap().resolution_warning);
}

#[test]
fn brier_and_report_ranges() {
    assert!((brier(&[Label::Negative, Label::Positive], &[0.2, 0.9]).unwrap() - 0.025).abs() < 1e-15);
    let (p, q) = uic_core::gaussmix::two_cluster_mixtures();
    let task = Task::new(0.01, p, q, LossSpec::ce()).unwrap();
    let data = task.sample_counts(100, 10_000, 3).unwrap();
    let rep = metric_report(&data, &LinearClassifier::new(vec![-1.0, 0.0], -3.0), 0.01, 0.001).unwrap();
    for v in [rep.auc, rep.op_auc, rep.recall_at_fpr, rep.accuracy, rep.brier] {
        assert!((0.0..=1.0).contains(&v), "{rep:?}");
    }
}

#[test]
fn oracle_influence_matches_upweight_and_retrain() {
    let mut r = ChaCha20Rng::seed_from_u64(21);
    for (i, spec) in [LossSpec::ce(), LossSpec::alpha(0.5), LossSpec::focal(1.0)]
        .iter()
        .cycle()
        .take(12)
        .enumerate()
    {
        let data = random_problem(&mut r, i as u64);
        let clf = fit_newton(&data, spec, None, 1e-10).unwrap();
        let k = r.random_range(0..data.len());
        let rep = influence(&data, &clf, spec, &data.samples()[k]).unwrap();
        assert!(!rep.hessian_singular);
        let fd = retrain_influence(&data, spec, k, 1e-3, 1e-10).unwrap();
        let diff: Vec<f64> = rep.influence_oracle.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm2(&diff) / norm2(&rep.influence_oracle);
        assert!(
            rel < 0.05,
            "{} #{i}: {:?} vs {fd:?}",
            spec.label(),
            rep.influence_oracle
        );
    }
}

#[test]
fn poorly_fit_points_dominate_alpha_influence() {
    let mut r = ChaCha20Rng::seed_from_u64(5);
    let spec = LossSpec::alpha(0.5);
    let mut wins = 0;
    for i in 0..20 {
        let data = random_problem(&mut r, 50 + i);
        let clf = fit_newton(&data, &spec, None, 1e-10).unwrap();
        let mut pos: Vec<&LabeledSample> = data.iter().filter(|s| s.y == Label::Positive).collect();
        pos.sort_by(|a, b| clf.margin(&a.x).total_cmp(&clf.margin(&b.x)));
        let poor = influence(&data, &clf, &spec, pos[0]).unwrap();
        let well = influence(&data, &clf, &spec, pos[pos.len() - 1]).unwrap();
        if norm2(&poor.influence_oracle) > norm2(&well.influence_oracle) {
            wins += 1;
        }
        for rep in [&poor, &well] {
            let c = rep.cosine.unwrap();
            assert_eq!(rep.flagged, !(c >= 0.9));
            assert!(rep.g_value.unwrap().is_finite());
        }
    }
    assert!(wins >= 19, "{wins}/20");
}

#[test]
fn zero_gradient_point_has_no_influence() {
    let mut r = ChaCha20Rng::seed_from_u64(8);
    let data = random_problem(&mut r, 0);
    let spec = LossSpec::square();
    let clf = fit_newton(&data, &spec, None, 1e-10).unwrap();
    // far beyond the margin clip the link saturates and ∇ℓ is exactly zero
    let dir: Vec<f64> = clf.w.iter().map(|w| w * 1e3 / norm2(&clf.w)).collect();
    let z = LabeledSample::new(dir, Label::Positive);
    assert!(clf.margin(&z.x) > 100.0);
    let rep = influence(&data, &clf, &spec, &z).unwrap();
    assert!(rep.influence_oracle.iter().all(|v| *v == 0.0), "{rep:?}");
    assert!(rep.influence_closed_form.is_none());
}
