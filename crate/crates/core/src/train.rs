//! Fitting linear classifiers under any loss, on samples or on a
//! stratified Monte Carlo sample of a task's population.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmix::{Dataset, Task};
use crate::limits::LinearClassifier;
use crate::loss::{Label, Link, LossFamily, LossSpec};
use crate::rng::{self, streams};

/// Objective values above this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e10;

/// Newton steps are at most this multiple of `1 + ‖θ‖`.
const MAX_NEWTON_STEP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Optimizer {
    /// Minibatch SGD with heavy-ball momentum: `v ← μv + g`, `θ ← θ - lr·v`.
    Sgd {
        lr: f64,
        momentum: f64,
    },
    FullBatchGd {
        lr: f64,
    },
    /// Damped Newton on the full objective until `‖∇‖ < tol`; `epochs` caps
    /// the number of steps.
    Newton {
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    #[default]
    Zeros,
    /// `w = 0`, `b = ln π - ln(1 - π)`.
    LogitAdjusted,
    Explicit {
        w: Vec<f64>,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub link: Link,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Sgd {
                lr: 0.05,
                momentum: 0.9,
            },
            epochs: 200,
            batch_size: 256,
            seed: 0,
            init: Init::Zeros,
            link: Link::Logistic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, spec: &LossSpec) -> Result<()> {
        let lr_ok = |lr: f64| lr > 0.0 && lr.is_finite();
        match self.optimizer {
            Optimizer::Sgd { lr, momentum } => {
                if !lr_ok(lr) {
                    return Err(Error::Invalid(format!("learning rate must be positive, got {lr}")));
                }
                if !(0.0..1.0).contains(&momentum) {
                    return Err(Error::Invalid(format!("momentum must lie in [0, 1), got {momentum}")));
                }
            }
            Optimizer::FullBatchGd { lr } if !lr_ok(lr) => {
                return Err(Error::Invalid(format!("learning rate must be positive, got {lr}")));
            }
            Optimizer::Newton { tol } if !(tol > 0.0) => {
                return Err(Error::Invalid(format!("Newton tolerance must be positive, got {tol}")));
            }
            _ => {}
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be >= 1".into()));
        }
        if self.link == Link::Identity && spec.family != LossFamily::Square {
            return Err(Error::Invalid(format!(
                "the identity link is only defined for square loss, not {}",
                spec.family
            )));
        }
        spec.validate()
    }
}

/// What is being minimized.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Mean loss over the samples.
    Empirical(&'a Dataset),
    /// `(1/n) Σ cᵢ ℓᵢ` with per-sample multipliers `cᵢ`.
    Weighted(&'a Dataset, &'a [f64]),
    /// `π E_P ℓ + (1-π) E_Q ℓ` estimated from `mc_n` draws per class.
    Population { task: &'a Task, mc_n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub classifier: LinearClassifier,
    /// Full objective after each epoch.
    pub loss_trace: Vec<f64>,
    pub grad_norm_final: f64,
}

/// `ln π - ln(1 - π)`.
pub fn logit_offset(pi: f64) -> Result<f64> {
    if pi > 0.0 && pi < 1.0 {
        Ok(pi.ln() - (-pi).ln_1p())
    } else {
        Err(Error::Domain {
            what: "pi",
            value: pi,
            domain: "(0, 1)",
        })
    }
}

/// Flattened weighted training set: `R(θ) = Σ cᵢ ℓ(yᵢ, θᵀx̃ᵢ)`.
struct Problem {
    d: usize,
    xs: Vec<f64>,
    ys: Vec<Label>,
    coef: Vec<f64>,
    prior: f64,
}

impl Problem {
    fn from_objective(obj: &Objective<'_>, seed: u64) -> Result<Self> {
        match *obj {
            Objective::Empirical(data) => {
                let n = data.len() as f64;
                Self::from_dataset(data, vec![1.0 / n; data.len()])
            }
            Objective::Weighted(data, weights) => {
                if weights.len() != data.len() {
                    return Err(Error::LengthMismatch {
                        left: data.len(),
                        right: weights.len(),
                    });
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::Invalid("sample weights must be finite and nonnegative".into()));
                }
                let n = data.len() as f64;
                Self::from_dataset(data, weights.iter().map(|w| w / n).collect())
            }
            Objective::Population { task, mc_n } => {
                if mc_n == 0 {
                    return Err(Error::Empty("Monte Carlo sample"));
                }
                let d = task.dim();
                let mut xs = Vec::with_capacity(2 * mc_n * d);
                let mut ys = Vec::with_capacity(2 * mc_n);
                let mut coef = Vec::with_capacity(2 * mc_n);
                for (k, (mix, y, w)) in [
                    (&task.minority, Label::Positive, task.pi),
                    (&task.majority, Label::Negative, 1.0 - task.pi),
                ]
                .into_iter()
                .enumerate()
                {
                    let mut r = rng::substream(seed, streams::MONTE_CARLO, 100 + k as u64);
                    for _ in 0..mc_n {
                        xs.extend(mix.sample(&mut r));
                        ys.push(y);
                        coef.push(w / mc_n as f64);
                    }
                }
                Ok(Problem {
                    d,
                    xs,
                    ys,
                    coef,
                    prior: task.pi,
                })
            }
        }
    }

    fn from_dataset(data: &Dataset, coef: Vec<f64>) -> Result<Self> {
        let n_pos = data.count(Label::Positive);
        Ok(Problem {
            d: data.dim(),
            xs: data.iter().flat_map(|s| s.x.iter().copied()).collect(),
            ys: data.iter().map(|s| s.y).collect(),
            coef,
            prior: n_pos as f64 / data.len() as f64,
        })
    }

    fn len(&self) -> usize {
        self.ys.len()
    }

    fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    fn margin(&self, theta: &[f64], i: usize) -> f64 {
        let (b, w) = theta.split_last().expect("non-empty parameters");
        self.x(i).iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + b
    }

    /// Objective and gradient over all samples.
    fn value_grad(&self, spec: &LossSpec, link: Link, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.d + 1];
        let mut v = 0.0;
        for i in 0..self.len() {
            let ld = spec.margin_derivs(link, self.ys[i], self.margin(theta, i));
            let c = self.coef[i];
            v += c * ld.value;
            let s = c * ld.d1;
            for (gj, xj) in g.iter_mut().zip(self.x(i)) {
                *gj += s * xj;
            }
            g[self.d] += s;
        }
        (v, g)
    }

    fn value(&self, spec: &LossSpec, link: Link, theta: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| self.coef[i] * spec.margin_derivs(link, self.ys[i], self.margin(theta, i)).value)
            .sum()
    }

    fn hessian(&self, spec: &LossSpec, link: Link, theta: &[f64]) -> DMatrix<f64> {
        let p = self.d + 1;
        let mut h = DMatrix::zeros(p, p);
        let mut xt = vec![1.0; p];
        for i in 0..self.len() {
            let ld = spec.margin_derivs(link, self.ys[i], self.margin(theta, i));
            let s = self.coef[i] * ld.d2;
            if s == 0.0 {
                continue;
            }
            xt[..self.d].copy_from_slice(self.x(i));
            for a in 0..p {
                for b in 0..=a {
                    h[(a, b)] += s * xt[a] * xt[b];
                }
            }
        }
        h.fill_upper_triangle_with_lower_triangle();
        h
    }
}

fn initial_theta(init: &Init, d: usize, prior: f64) -> Result<Vec<f64>> {
    match init {
        Init::Zeros => Ok(vec![0.0; d + 1]),
        Init::LogitAdjusted => {
            let mut t = vec![0.0; d + 1];
            t[d] = logit_offset(prior)?;
            Ok(t)
        }
        Init::Explicit { w, b } => {
            if w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w.len(),
                });
            }
            let mut t = w.clone();
            t.push(*b);
            Ok(t)
        }
    }
}

fn guard(epoch: usize, value: f64) -> Result<()> {
    if value.is_finite() && value <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, value })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes the margin-form objective. Deterministic given `cfg.seed` and
/// the data.
pub fn fit_linear(objective: Objective<'_>, spec: &LossSpec, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate(spec)?;
    let prob = Problem::from_objective(&objective, cfg.seed)?;
    let mut theta = initial_theta(&cfg.init, prob.d, prob.prior)?;
    let link = cfg.link;
    let mut trace = Vec::with_capacity(cfg.epochs);
    match cfg.optimizer {
        Optimizer::Sgd { lr, momentum } => {
            let n = prob.len();
            let mut order: Vec<usize> = (0..n).collect();
            let mut shuffle = rng::stream(cfg.seed, streams::SHUFFLE);
            let mut vel = vec![0.0; theta.len()];
            let mut g = vec![0.0; theta.len()];
            let bs = cfg.batch_size.min(n);
            for epoch in 0..cfg.epochs {
                if bs < n {
                    order.shuffle(&mut shuffle);
                }
                for batch in order.chunks(bs) {
                    g.iter_mut().for_each(|v| *v = 0.0);
                    // unbiased for the weighted objective: (1/|B|) Σ n cᵢ ∇ℓᵢ
                    let scale = n as f64 / batch.len() as f64;
                    for &i in batch {
                        let ld = spec.margin_derivs(link, prob.ys[i], prob.margin(&theta, i));
                        let s = scale * prob.coef[i] * ld.d1;
                        for (gj, xj) in g.iter_mut().zip(prob.x(i)) {
                            *gj += s * xj;
                        }
                        g[prob.d] += s;
                    }
                    for ((t, v), gj) in theta.iter_mut().zip(vel.iter_mut()).zip(&g) {
                        *v = momentum * *v + gj;
                        *t -= lr * *v;
                    }
                }
                let value = prob.value(spec, link, &theta);
                guard(epoch, value)?;
                trace.push(value);
            }
        }
        Optimizer::FullBatchGd { lr } => {
            for epoch in 0..cfg.epochs {
                let (_, g) = prob.value_grad(spec, link, &theta);
                for (t, gj) in theta.iter_mut().zip(&g) {
                    *t -= lr * gj;
                }
                let value = prob.value(spec, link, &theta);
                guard(epoch, value)?;
                trace.push(value);
            }
        }
        Optimizer::Newton { tol } => {
            for epoch in 0..cfg.epochs {
                let (value, g) = prob.value_grad(spec, link, &theta);
                guard(epoch, value)?;
                if norm(&g) < tol {
                    trace.push(value);
                    break;
                }
                let mut step = newton_step(&prob.hessian(spec, link, &theta), &g)?;
                // flat curvature far from the boundary gives huge steps; cap
                // them relative to the current parameters
                let cap = MAX_NEWTON_STEP * (1.0 + norm(&theta));
                let len = norm(&step);
                if len > cap {
                    step.iter_mut().for_each(|s| *s *= cap / len);
                }
                let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
                let mut t = 1.0;
                let mut next: Vec<f64>;
                let accepted = loop {
                    next = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                    let v = prob.value(spec, link, &next);
                    if v <= value - 1e-4 * t * slope {
                        break true;
                    }
                    // near the optimum value differences drop below rounding;
                    // fall back to requiring a smaller gradient
                    if (v - value).abs() <= 1e-12 * (1.0 + value.abs())
                        && norm(&prob.value_grad(spec, link, &next).1) < norm(&g)
                    {
                        break true;
                    }
                    if t < 1e-12 {
                        break false;
                    }
                    t *= 0.5;
                };
                if !accepted {
                    // no descent along the Newton direction: stay put
                    trace.push(value);
                    break;
                }
                theta = next;
                trace.push(prob.value(spec, link, &theta));
            }
        }
    }
    let (_, g) = prob.value_grad(spec, link, &theta);
    Ok(TrainResult {
        classifier: LinearClassifier::from_params(&theta),
        loss_trace: trace,
        grad_norm_final: norm(&g),
    })
}

/// `H⁻¹g`, shifting `H` by a multiple of the identity until it is positive definite.
fn newton_step(h: &DMatrix<f64>, g: &[f64]) -> Result<Vec<f64>> {
    let gv = DVector::from_column_slice(g);
    let p = h.nrows();
    let scale = h.diagonal().amax().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..60 {
        let m = h + DMatrix::identity(p, p) * shift;
        if let Some(c) = m.cholesky() {
            return Ok(c.solve(&gv).iter().copied().collect());
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
    }
    Err(Error::Singular("Newton system"))
}

/// Mean loss and gradient of a dataset objective at `clf`, in `(w, b)` order.
pub fn objective_gradient(
    data: &Dataset,
    spec: &LossSpec,
    link: Link,
    clf: &LinearClassifier,
) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    clf.check_dim(data.dim())?;
    let n = data.len() as f64;
    let prob = Problem::from_dataset(data, vec![1.0 / n; data.len()])?;
    Ok(prob.value_grad(spec, link, &clf.params()))
}

/// Mean per-sample Hessian in `(w, b)` of a dataset objective at `clf`.
pub fn objective_hessian(data: &Dataset, spec: &LossSpec, link: Link, clf: &LinearClassifier) -> Result<DMatrix<f64>> {
    spec.validate()?;
    clf.check_dim(data.dim())?;
    let n = data.len() as f64;
    let prob = Problem::from_dataset(data, vec![1.0 / n; data.len()])?;
    Ok(prob.hessian(spec, link, &clf.params()))
}

/// `n_points` points on `{x : wᵀx + b = 0}`, spaced uniformly over `x_range`
/// along the axis the line is most nearly parallel to.
pub fn decision_boundary_2d(clf: &LinearClassifier, x_range: (f64, f64), n_points: usize) -> Result<Vec<[f64; 2]>> {
    clf.check_dim(2)?;
    let [w0, w1] = [clf.w[0], clf.w[1]];
    if w0 == 0.0 && w1 == 0.0 {
        return Err(Error::Invalid("classifier has w = 0 and no decision boundary".into()));
    }
    if n_points < 2 || !(x_range.0 < x_range.1) {
        return Err(Error::Invalid(
            "boundary needs n_points >= 2 and a nonempty range".into(),
        ));
    }
    let step = (x_range.1 - x_range.0) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let s = x_range.0 + step * i as f64;
            if w1.abs() >= w0.abs() {
                [s, -(w0 * s + clf.b) / w1]
            } else {
                [-(w1 * s + clf.b) / w0, s]
            }
        })
        .collect())
}
