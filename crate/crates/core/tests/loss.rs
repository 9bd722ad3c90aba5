use proptest::prelude::*;
use uic_core::loss::{loss_grad, loss_hess, loss_value, margin_loss_value, pointwise_risk};
use uic_core::math::sigmoid;
use uic_core::{Label, LossFamily, LossSpec};

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// 20 settings per family. Families without hyperparameters vary the
/// irrelevant fields instead, which must not change anything.
fn settings(family: LossFamily) -> Vec<LossSpec> {
    let t = linspace(0.0, 1.0, 20);
    t.iter()
        .map(|&s| {
            let mut spec = LossSpec::new(family);
            match family {
                LossFamily::Ce | LossFamily::Square | LossFamily::Erf => {
                    spec.gamma = 3.0 * s;
                    spec.alpha = 0.1 + 0.9 * s;
                    spec.cpen = 2.0 * s;
                }
                LossFamily::Focal => spec.gamma = 5.0 * s,
                LossFamily::Poly => spec.epsilon = -1.0 + 6.0 * s,
                LossFamily::Vs => spec.delta1 = 0.05 + 0.95 * s,
                LossFamily::Alpha => spec.alpha = 0.05 + 0.95 * s,
                LossFamily::Tbl => {
                    spec.alpha = 0.05 + 0.95 * s;
                    spec.cpen = 3.0 * (1.0 - s);
                }
            }
            spec.validate().unwrap();
            spec
        })
        .collect()
}

fn etahat_grid() -> Vec<f64> {
    let mut g = vec![0.01];
    g.extend((1..20).map(|i| 0.05 * i as f64));
    g.push(0.99);
    g
}

/// Central difference with a step scaled to the distance from the boundary,
/// since `ℓ` can vary like `ŷ^{-1/α}` near 0.
fn central_diff(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.min(1.0 - x);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[test]
fn gradients_match_central_differences() {
    let mut checked = 0;
    for family in LossFamily::ALL {
        for spec in settings(family) {
            for y in [Label::Negative, Label::Positive] {
                for x in etahat_grid() {
                    let analytic = loss_grad(&spec, y, x).unwrap();
                    let fd = central_diff(|v| loss_value(&spec, y, v).unwrap(), x);
                    let rel = (analytic - fd).abs() / (1.0 + analytic.abs());
                    assert!(
                        rel < 1e-5,
                        "{} y={:?} ŷ={x}: analytic {analytic} fd {fd}",
                        spec.label(),
                        y
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 8 * 20 * 2 * 21);
}

#[test]
fn hessians_match_central_differences() {
    for family in LossFamily::ALL {
        for spec in settings(family) {
            for y in [Label::Negative, Label::Positive] {
                for x in etahat_grid() {
                    let analytic = loss_hess(&spec, y, x).unwrap();
                    let fd = central_diff(|v| loss_grad(&spec, y, v).unwrap(), x);
                    let rel = (analytic - fd).abs() / (1.0 + analytic.abs());
                    assert!(
                        rel < 1e-5,
                        "{} y={:?} ŷ={x}: analytic {analytic} fd {fd}",
                        spec.label(),
                        y
                    );
                }
            }
        }
    }
}

#[test]
fn margin_derivatives_match_central_differences() {
    for family in LossFamily::ALL {
        for spec in settings(family).into_iter().step_by(4) {
            for y in [Label::Negative, Label::Positive] {
                for m in linspace(-4.0, 4.0, 17) {
                    let d = spec.margin_derivs(Default::default(), y, m);
                    let h = 1e-5;
                    let v = |t: f64| spec.margin_derivs(Default::default(), y, t);
                    let fd1 = (v(m + h).value - v(m - h).value) / (2.0 * h);
                    let fd2 = (v(m + h).d1 - v(m - h).d1) / (2.0 * h);
                    assert!((d.d1 - fd1).abs() / (1.0 + d.d1.abs()) < 1e-6, "{} m={m}", spec.label());
                    assert!((d.d2 - fd2).abs() / (1.0 + d.d2.abs()) < 1e-6, "{} m={m}", spec.label());
                }
            }
        }
    }
}

#[test]
fn symmetric_families_mirror_labels() {
    for family in LossFamily::ALL {
        for spec in settings(family) {
            let worst = etahat_grid()
                .into_iter()
                .map(|x| {
                    let a = loss_value(&spec, Label::Positive, x).unwrap();
                    let b = loss_value(&spec, Label::Negative, 1.0 - x).unwrap();
                    (a - b).abs() / (1.0 + a.abs())
                })
                .fold(0.0, f64::max);
            if family.is_symmetric() {
                assert!(worst < 1e-12, "{}: {worst}", spec.label());
            } else if spec.delta1 < 1.0 {
                // VS is asymmetric by design
                assert!(worst > 1e-3, "{}: {worst}", spec.label());
            }
        }
    }
}

#[test]
fn erf_is_nonnegative_and_vanishes_when_correct() {
    let spec = LossSpec::erf();
    for x in linspace(1e-9, 1.0 - 1e-9, 1001) {
        assert!(loss_value(&spec, Label::Positive, x).unwrap() >= 0.0);
        assert!(loss_value(&spec, Label::Negative, x).unwrap() >= 0.0);
    }
    let near = [0.9, 0.99, 0.999, 0.9999].map(|x| loss_value(&spec, Label::Positive, x).unwrap());
    assert!(near.windows(2).all(|w| w[1] < w[0]));
    assert!(near[3] < 1e-10);
    // the Ψ/Ψ′ form near ŷ = 1/2 agrees with cross entropy to second order
    let ce = loss_value(&LossSpec::ce(), Label::Positive, 0.5).unwrap();
    let erf = loss_value(&spec, Label::Positive, 0.5).unwrap();
    assert!((erf - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    assert!(erf < ce);
}

#[test]
fn documented_anchor_values() {
    let ln2 = std::f64::consts::LN_2;
    assert!((loss_value(&LossSpec::ce(), Label::Positive, 0.5).unwrap() - ln2).abs() < 1e-15);
    assert!((loss_value(&LossSpec::alpha(0.5), Label::Positive, 0.5).unwrap() - 1.0).abs() < 1e-14);
    // ŷ = 1 is clamped to 1 - 1e-12 before the logarithm
    assert!(loss_value(&LossSpec::focal(2.0), Label::Positive, 1.0).unwrap() < 1e-30);
    assert!((loss_grad(&LossSpec::square(), Label::Positive, 0.5).unwrap() + 1.0).abs() < 1e-15);
    assert!((loss_grad(&LossSpec::ce(), Label::Negative, 0.5).unwrap() - 2.0).abs() < 1e-15);
    let r = pointwise_risk(&LossSpec::square(), 0.3, 0.3).unwrap();
    assert!((r.value - 0.21).abs() < 1e-15);
    assert!((margin_loss_value(&LossSpec::ce(), Label::Positive, 0.0).unwrap() - ln2).abs() < 1e-15);
}

fn any_spec() -> impl Strategy<Value = LossSpec> {
    (
        0usize..8,
        0.0f64..5.0,
        -1.0f64..5.0,
        0.05f64..=1.0,
        0.05f64..=1.0,
        0.0f64..3.0,
    )
        .prop_map(|(f, gamma, epsilon, delta1, alpha, cpen)| LossSpec {
            family: LossFamily::ALL[f],
            gamma,
            epsilon,
            delta1,
            alpha,
            cpen,
        })
}

proptest! {
    #[test]
    fn pointwise_risk_is_the_eta_average(spec in any_spec(), eta in 0.0f64..=1.0, x in 0.001f64..0.999) {
        let r = pointwise_risk(&spec, eta, x).unwrap();
        let expect = (1.0 - eta) * loss_value(&spec, Label::Negative, x).unwrap()
            + eta * loss_value(&spec, Label::Positive, x).unwrap();
        prop_assert_eq!(r.value, expect);
    }

    #[test]
    fn margin_form_composes_with_the_logistic_link(spec in any_spec(), m in -8.0f64..8.0, pos in any::<bool>()) {
        let y = if pos { Label::Positive } else { Label::Negative };
        let a = margin_loss_value(&spec, y, m).unwrap();
        let b = loss_value(&spec, y, sigmoid(m)).unwrap();
        // beyond |m| ≈ 8 the probability path loses digits in 1 - σ(m)
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn tbl_without_penalty_is_alpha(alpha in 0.05f64..=1.0, x in 0.0f64..=1.0, pos in any::<bool>()) {
        let y = if pos { Label::Positive } else { Label::Negative };
        let a = loss_value(&LossSpec::tbl(alpha, 0.0), y, x).unwrap();
        let b = loss_value(&LossSpec::alpha(alpha), y, x).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn nonnegative_families_stay_nonnegative(spec in any_spec(), x in 0.0f64..=1.0, pos in any::<bool>()) {
        let y = if pos { Label::Positive } else { Label::Negative };
        let v = loss_value(&spec, y, x).unwrap();
        prop_assert!(v.is_finite());
        if spec.family != LossFamily::Poly {
            prop_assert!(v >= 0.0, "{} gave {}", spec.label(), v);
        }
    }
}
