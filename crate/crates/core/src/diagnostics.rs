//! Influence of single training points and ranking/calibration metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussmix::{Dataset, GaussianMixture, LabeledSample};
use crate::limits::LinearClassifier;
use crate::loss::{Label, Link, LossFamily, LossSpec};
use crate::math;
use crate::train::{self, Init, Objective, Optimizer, TrainConfig};

/// Directions with cosine below this are flagged.
pub const COSINE_FLAG: f64 = 0.9;

const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub point: LabeledSample,
    /// `-H⁻¹∇ℓ(z*)` on `θ = (w, b)`.
    pub influence_oracle: Vec<f64>,
    /// Closed form for the alpha family; `None` otherwise.
    pub influence_closed_form: Option<Vec<f64>>,
    pub g_value: Option<f64>,
    /// Cosine between the closed form and the oracle.
    pub cosine: Option<f64>,
    /// The Hessian was numerically singular and a pseudo-inverse was used.
    pub hessian_singular: bool,
    /// Closed form and oracle disagree in direction, or either is degenerate.
    pub flagged: bool,
}

fn augmented(x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len() + 1, x.iter().copied().chain(std::iter::once(1.0)))
}

/// Solves `Hv = r`, falling back to the pseudo-inverse when `H` is singular.
fn solve_or_pinv(h: &DMatrix<f64>, r: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= SINGULAR_RCOND * smax {
        let pinv = svd
            .pseudo_inverse(SINGULAR_RCOND * smax.max(f64::MIN_POSITIVE))
            .map_err(|_| Error::Singular("Hessian pseudo-inverse"))?;
        return Ok((pinv * r, true));
    }
    let v = h.clone().full_piv_lu().solve(r).ok_or(Error::Singular("Hessian"))?;
    Ok((v, false))
}

/// Closed-form weight `g(y, m)` for the alpha-loss influence, with `y ∈ {0, 1}`.
pub fn influence_g(alpha: f64, y: Label, margin: f64) -> f64 {
    let y = y.value();
    let e = 1.0 / (alpha - 2.0);
    let pos = (-y * margin).exp();
    let neg = ((1.0 - y) * margin).exp();
    -y * (1.0 + pos).powf(e) * pos + (1.0 - y) * (1.0 + neg).powf(e) * neg
}

/// Influence of `z_star` on the fitted `(w, b)` of a linear model trained on
/// `samples` under `spec` with the logistic link.
pub fn influence(
    samples: &Dataset,
    clf: &LinearClassifier,
    spec: &LossSpec,
    z_star: &LabeledSample,
) -> Result<InfluenceReport> {
    spec.validate()?;
    clf.check_dim(samples.dim())?;
    if z_star.x.len() != samples.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            got: z_star.x.len(),
        });
    }
    let h = train::objective_hessian(samples, spec, Link::Logistic, clf)?;
    let xs = augmented(&z_star.x);
    let d1 = spec.margin_derivs(Link::Logistic, z_star.y, clf.margin(&z_star.x)).d1;
    let grad = &xs * d1;
    let (v, hessian_singular) = solve_or_pinv(&h, &grad)?;
    let oracle: Vec<f64> = v.iter().map(|x| -x).collect();

    let (influence_closed_form, g_value) = if spec.family == LossFamily::Alpha {
        let g_star = influence_g(spec.alpha, z_star.y, clf.margin(&z_star.x));
        let g_sum: f64 = samples
            .iter()
            .map(|s| influence_g(spec.alpha, s.y, clf.margin(&s.x)))
            .sum();
        let p = samples.dim() + 1;
        let n = samples.len() as f64;
        let gram = samples.iter().fold(DMatrix::zeros(p, p), |acc, s| {
            let x = augmented(&s.x);
            acc + &x * x.transpose()
        }) / n;
        let (v, _) = solve_or_pinv(&gram, &xs)?;
        let ratio = g_star / g_sum;
        (Some(v.iter().map(|x| ratio * x).collect::<Vec<_>>()), Some(g_star))
    } else {
        (None, None)
    };

    let cosine = influence_closed_form.as_ref().map(|t| math::cosine(t, &oracle));
    let flagged = match cosine {
        Some(c) => !(c.is_finite() && c >= COSINE_FLAG),
        None => false,
    } || !oracle.iter().all(|v| v.is_finite());
    Ok(InfluenceReport {
        point: z_star.clone(),
        influence_oracle: oracle,
        influence_closed_form,
        g_value,
        cosine,
        hessian_singular,
        flagged,
    })
}

/// Fits the mean-loss objective by damped Newton to gradient norm `tol`.
pub fn fit_newton(samples: &Dataset, spec: &LossSpec, weights: Option<&[f64]>, tol: f64) -> Result<LinearClassifier> {
    let cfg = TrainConfig {
        optimizer: Optimizer::Newton { tol },
        epochs: 500,
        batch_size: samples.len(),
        seed: 0,
        init: Init::Zeros,
        link: Link::Logistic,
    };
    let objective = match weights {
        Some(w) => Objective::Weighted(samples, w),
        None => Objective::Empirical(samples),
    };
    let r = train::fit_linear(objective, spec, &cfg)?;
    if r.grad_norm_final >= tol {
        return Err(Error::NonConvergence {
            iterations: cfg.epochs,
            residual: r.grad_norm_final,
        });
    }
    Ok(r.classifier)
}

/// Finite-difference influence of sample `index`: refits with that sample's
/// weight raised to `1 + eps` and returns `n(θ(ε) - θ)/ε`, which estimates
/// `-H⁻¹∇ℓ(z)` to first order.
pub fn retrain_influence(samples: &Dataset, spec: &LossSpec, index: usize, eps: f64, tol: f64) -> Result<Vec<f64>> {
    if index >= samples.len() {
        return Err(Error::Invalid(format!("sample index {index} out of range")));
    }
    let base = fit_newton(samples, spec, None, tol)?;
    let mut weights = vec![1.0; samples.len()];
    weights[index] += eps;
    let up = fit_newton(samples, spec, Some(&weights), tol)?;
    let n = samples.len() as f64;
    Ok(up
        .params()
        .iter()
        .zip(base.params())
        .map(|(a, b)| n * (a - b) / eps)
        .collect())
}

fn check_scores(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() {
        return Err(Error::Empty("positive scores"));
    }
    if neg.is_empty() {
        return Err(Error::Empty("negative scores"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::Invalid("scores contain NaN".into()));
    }
    Ok(())
}

/// Mann–Whitney AUC: `P(s₊ > s₋) + ½P(s₊ = s₋)`, by midranks.
pub fn auc(scores_pos: &[f64], scores_neg: &[f64]) -> Result<f64> {
    check_scores(scores_pos, scores_neg)?;
    let mut all: Vec<(f64, bool)> = scores_pos
        .iter()
        .map(|s| (*s, true))
        .chain(scores_neg.iter().map(|s| (*s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let np = scores_pos.len() as f64;
    let nn = scores_neg.len() as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Empirical ROC vertices `(fpr, tpr)` from the highest threshold down,
/// starting at `(0, 0)`; tied scores form a single step.
pub fn roc_curve(scores_pos: &[f64], scores_neg: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_scores(scores_pos, scores_neg)?;
    let mut all: Vec<(f64, bool)> = scores_pos
        .iter()
        .map(|s| (*s, true))
        .chain(scores_neg.iter().map(|s| (*s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let np = scores_pos.len() as f64;
    let nn = scores_neg.len() as f64;
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        pts.push((fp as f64 / nn, tp as f64 / np));
        i = j;
    }
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMetrics {
    /// Standardized partial AUC over `FPR ∈ [0, fpr_cap]`; 0.5 for random, 1 for perfect.
    pub op_auc: f64,
    pub recall_at_fpr: f64,
    /// Fewer than `1/fpr_point` negatives: the FPR point is not resolvable.
    pub resolution_warning: bool,
}

/// One-way partial AUC and recall at a fixed false positive rate.
pub fn partial_metrics(scores_pos: &[f64], scores_neg: &[f64], fpr_cap: f64, fpr_point: f64) -> Result<PartialMetrics> {
    for (what, v) in [("fpr_cap", fpr_cap), ("fpr_point", fpr_point)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Domain {
                what,
                value: v,
                domain: "(0, 1)",
            });
        }
    }
    let roc = roc_curve(scores_pos, scores_neg)?;
    let mut area = 0.0;
    for w in roc.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= fpr_cap {
            break;
        }
        let (xe, ye) = if x1 > fpr_cap {
            (fpr_cap, y0 + (y1 - y0) * (fpr_cap - x0) / (x1 - x0))
        } else {
            (x1, y1)
        };
        area += (xe - x0) * (y0 + ye) / 2.0;
    }
    let c = fpr_cap;
    let half_c2 = c * c / 2.0;
    let op_auc = 0.5 * (1.0 + (area - half_c2) / (c - half_c2));
    let recall_at_fpr = roc
        .iter()
        .filter(|(f, _)| *f <= fpr_point)
        .map(|(_, t)| *t)
        .fold(0.0, f64::max);
    Ok(PartialMetrics {
        op_auc,
        recall_at_fpr,
        resolution_warning: (scores_neg.len() as f64) < 1.0 / fpr_point,
    })
}

/// Mean of `(p - y)²`.
pub fn brier(labels: &[Label], probabilities: &[f64]) -> Result<f64> {
    if labels.len() != probabilities.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: probabilities.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    if let Some(&p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain {
            what: "probability",
            value: p,
            domain: "[0, 1]",
        });
    }
    Ok(labels
        .iter()
        .zip(probabilities)
        .map(|(y, p)| (p - y.value()).powi(2))
        .sum::<f64>()
        / labels.len() as f64)
}

pub fn accuracy(labels: &[Label], predictions: &[Label]) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    Ok(labels.iter().zip(predictions).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub auc: f64,
    pub op_auc: f64,
    pub recall_at_fpr: f64,
    pub accuracy: f64,
    pub brier: f64,
    pub resolution_warning: bool,
}

pub const DEFAULT_FPR_CAP: f64 = 0.01;
pub const DEFAULT_FPR_POINT: f64 = 0.001;

/// All metrics for `clf` on `data`, scoring by margin and calibrating by `σ(margin)`.
pub fn metric_report(data: &Dataset, clf: &LinearClassifier, fpr_cap: f64, fpr_point: f64) -> Result<MetricReport> {
    clf.check_dim(data.dim())?;
    let (pos, neg) = data.scores(clf);
    let pm = partial_metrics(&pos, &neg, fpr_cap, fpr_point)?;
    let labels: Vec<Label> = data.iter().map(|s| s.y).collect();
    let probs: Vec<f64> = data.iter().map(|s| math::sigmoid(clf.margin(&s.x))).collect();
    let preds: Vec<Label> = data.iter().map(|s| clf.predict(&s.x)).collect();
    Ok(MetricReport {
        auc: auc(&pos, &neg)?,
        op_auc: pm.op_auc,
        recall_at_fpr: pm.recall_at_fpr,
        accuracy: accuracy(&labels, &preds)?,
        brier: brier(&labels, &probs)?,
        resolution_warning: pm.resolution_warning,
    })
}

/// Population AUC of score `wᵀx` between two Gaussian mixtures:
/// `Σᵢⱼ π₊ⁱπ₋ʲ Ψ(wᵀ(μ₊ⁱ - μ₋ʲ) / √(wᵀ(Σ₊ⁱ + Σ₋ʲ)w))`.
pub fn mixture_auc(w: &[f64], minority: &GaussianMixture, majority: &GaussianMixture) -> Result<f64> {
    let mut total = 0.0;
    for (pp, cp) in minority.weights().iter().zip(minority.components()) {
        for (pq, cq) in majority.weights().iter().zip(majority.components()) {
            total += pp * pq * crate::limits::two_gaussian_auc(w, cp, cq)?;
        }
    }
    Ok(total)
}
