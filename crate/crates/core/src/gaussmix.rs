//! Gaussian mixture class-conditional densities, classification tasks,
//! labeled samples and the population risk of a linear classifier.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::LinearClassifier;
use crate::loss::{Label, Link, LossSpec};
use crate::math;
use crate::rng::{self, streams, Rng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A multivariate normal with a validated covariance.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

/// Equal mean and covariance; the factor follows from the covariance.
impl PartialEq for Gaussian {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Empty("mean vector"));
        }
        if cov.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.len(),
            });
        }
        if let Some(row) = cov.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        let cov = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Self::from_parts(DVector::from_vec(mean), cov)
    }

    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMixture("non-finite mean or covariance entry".into()));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidMixture("covariance is not symmetric".into()));
        }
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::InvalidMixture("covariance is not positive definite".into()))?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Gaussian {
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
            mean,
            cov,
            chol,
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::from_parts(DVector::zeros(d), DMatrix::identity(d, d)).expect("identity is PD")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor `L` with `LLᵀ = Σ`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.dim();
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &self.mean + self.chol.l_dirty().lower_triangle() * z;
        x.iter().copied().collect()
    }
}

/// `Σᵢ wᵢ N(μⁱ, Σⁱ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GaussianMixture {
    /// Weights must be nonnegative and sum to 1 within 1e-9; they are
    /// renormalized so the stored simplex is exact to rounding.
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMixture("mixture has no components".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: components.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMixture("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, not 1")));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.dim(),
            });
        }
        Ok(GaussianMixture {
            weights: weights.iter().map(|w| w / total).collect(),
            components,
        })
    }

    pub fn from_params(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if means.len() != covariances.len() {
            return Err(Error::LengthMismatch {
                left: means.len(),
                right: covariances.len(),
            });
        }
        let comps = means
            .into_iter()
            .zip(covariances)
            .map(|(m, c)| Gaussian::new(m, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights, comps)
    }

    pub fn single(g: Gaussian) -> Self {
        GaussianMixture {
            weights: vec![1.0],
            components: vec![g],
        }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.log_density_unchecked(x))
    }

    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_density(x))
            .collect();
        math::log_sum_exp(&terms)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }

    /// Mixture mean `Σᵢ wᵢ μⁱ`.
    pub fn mean(&self) -> DVector<f64> {
        self.weights
            .iter()
            .zip(&self.components)
            .fold(DVector::zeros(self.dim()), |acc, (w, c)| acc + c.mean() * *w)
    }

    /// Total covariance: within-component plus between-component spread.
    pub fn total_covariance(&self) -> DMatrix<f64> {
        let mu = self.mean();
        let d = self.dim();
        self.weights
            .iter()
            .zip(&self.components)
            .fold(DMatrix::zeros(d, d), |acc, (w, c)| {
                let dm = c.mean() - &mu;
                acc + (c.cov() + &dm * dm.transpose()) * *w
            })
    }

    /// CDF of a one-dimensional mixture.
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        self.check_dim(&[x])?;
        Ok(self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * math::std_normal_cdf((x - c.mean()[0]) / c.cov()[(0, 0)].sqrt()))
            .sum())
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let idx = self.pick_component(rng.random::<f64>());
        self.components[idx].sample(rng)
    }

    fn pick_component(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    pub fn sample_n(&self, n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawMixture> for GaussianMixture {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        GaussianMixture::from_params(raw.weights, raw.means, raw.covariances)
    }
}

impl From<GaussianMixture> for RawMixture {
    fn from(m: GaussianMixture) -> Self {
        let d = m.dim();
        RawMixture {
            weights: m.weights.clone(),
            means: m
                .components
                .iter()
                .map(|c| c.mean().iter().copied().collect())
                .collect(),
            covariances: m
                .components
                .iter()
                .map(|c| (0..d).map(|i| (0..d).map(|j| c.cov()[(i, j)]).collect()).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Label,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: Label) -> Self {
        LabeledSample { x, y }
    }
}

/// A non-empty collection of samples of one common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("dataset"))?;
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::Empty("feature vector"));
        }
        if let Some(s) = samples.iter().find(|s| s.x.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.x.len(),
            });
        }
        Ok(Dataset { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSample> {
        self.samples.iter()
    }

    pub fn count(&self, y: Label) -> usize {
        self.samples.iter().filter(|s| s.y == y).count()
    }

    /// Scores of a classifier split by class, `(positives, negatives)`.
    pub fn scores(&self, clf: &LinearClassifier) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for s in &self.samples {
            let m = clf.margin(&s.x);
            match s.y {
                Label::Positive => pos.push(m),
                Label::Negative => neg.push(m),
            }
        }
        (pos, neg)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a LabeledSample;
    type IntoIter = std::slice::Iter<'a, LabeledSample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// How [`Task::population_risk`] integrates over the class conditionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskMethod {
    /// Stratified: `n` draws from each class conditional.
    MonteCarlo { n: usize, seed: u64 },
    /// Tensor Gauss–Hermite per component, `d ≤ 2`.
    Quadrature { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    /// Standard error for Monte Carlo; difference to a half-order rule for quadrature.
    pub error: f64,
}

/// A classification task: prior `π` of the minority class (y = 1), class
/// conditionals `P` (minority) and `Q` (majority), and a loss.
#[derive(Debug, Clone)]
pub struct Task {
    pub pi: f64,
    pub rho: f64,
    pub minority: GaussianMixture,
    pub majority: GaussianMixture,
    pub loss: LossSpec,
}

impl Task {
    pub fn new(pi: f64, minority: GaussianMixture, majority: GaussianMixture, loss: LossSpec) -> Result<Self> {
        if !(pi > 0.0 && pi <= 0.5) {
            return Err(Error::Domain {
                what: "pi",
                value: pi,
                domain: "(0, 0.5]",
            });
        }
        if minority.dim() != majority.dim() {
            return Err(Error::DimensionMismatch {
                expected: minority.dim(),
                got: majority.dim(),
            });
        }
        loss.validate()?;
        Ok(Task {
            pi,
            rho: pi / (1.0 - pi),
            minority,
            majority,
            loss,
        })
    }

    /// Task with imbalance ratio `ρ = π/(1-π)`.
    pub fn with_rho(rho: f64, minority: GaussianMixture, majority: GaussianMixture, loss: LossSpec) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Domain {
                what: "rho",
                value: rho,
                domain: "(0, 1]",
            });
        }
        let mut task = Self::new(rho / (1.0 + rho), minority, majority, loss)?;
        task.rho = rho;
        Ok(task)
    }

    pub fn dim(&self) -> usize {
        self.minority.dim()
    }

    pub fn with_loss(&self, loss: LossSpec) -> Result<Self> {
        loss.validate()?;
        Ok(Task { loss, ..self.clone() })
    }

    /// `ln(η/(1-η)) = ln ρ + ln p(x) - ln q(x)`.
    pub fn log_odds(&self, x: &[f64]) -> Result<f64> {
        let lp = self.minority.log_density(x)?;
        let lq = self.majority.log_density(x)?;
        if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
            return Err(Error::Invalid(
                "both class densities underflow at the evaluation point".into(),
            ));
        }
        Ok(self.rho.ln() + lp - lq)
    }

    /// `η(x) = πp(x) / (πp(x) + (1-π)q(x))`.
    pub fn posterior_eta(&self, x: &[f64]) -> Result<f64> {
        self.log_odds(x).map(math::sigmoid)
    }

    /// `n` i.i.d. samples; each label is positive with probability `π`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Empty("sample size"));
        }
        let mut labels = rng::stream(seed, streams::LABELS);
        let order: Vec<bool> = (0..n).map(|_| labels.random::<f64>() < self.pi).collect();
        self.assemble(&order, seed)
    }

    /// Exactly `n_pos` minority and `n_neg` majority samples, minority first.
    pub fn sample_counts(&self, n_pos: usize, n_neg: usize, seed: u64) -> Result<Dataset> {
        if n_pos + n_neg == 0 {
            return Err(Error::Empty("sample size"));
        }
        let mut order = vec![true; n_pos];
        order.resize(n_pos + n_neg, false);
        self.assemble(&order, seed)
    }

    fn assemble(&self, positive: &[bool], seed: u64) -> Result<Dataset> {
        let mut rp = rng::stream(seed, streams::MINORITY);
        let mut rq = rng::stream(seed, streams::MAJORITY);
        let samples = positive
            .iter()
            .map(|&pos| {
                if pos {
                    LabeledSample::new(self.minority.sample(&mut rp), Label::Positive)
                } else {
                    LabeledSample::new(self.majority.sample(&mut rq), Label::Negative)
                }
            })
            .collect();
        Dataset::new(samples)
    }

    /// `π E_P ℓ(1, σ(wᵀx+b)) + (1-π) E_Q ℓ(0, σ(wᵀx+b))`.
    pub fn population_risk(&self, clf: &LinearClassifier, method: RiskMethod) -> Result<RiskEstimate> {
        clf.check_dim(self.dim())?;
        match method {
            RiskMethod::MonteCarlo { n, seed } => {
                let est = self.population_risk_grad(clf, n, seed)?;
                Ok(RiskEstimate {
                    value: est.value,
                    error: est.std_error,
                })
            }
            RiskMethod::Quadrature { order } => {
                if self.dim() > 2 {
                    return Err(Error::Invalid(format!(
                        "quadrature supports d <= 2, task has d = {}",
                        self.dim()
                    )));
                }
                if order < 2 {
                    return Err(Error::Invalid("quadrature order must be at least 2".into()));
                }
                let full = self.quadrature_risk(clf, order);
                let half = self.quadrature_risk(clf, order / 2);
                Ok(RiskEstimate {
                    value: full,
                    error: (full - half).abs(),
                })
            }
        }
    }

    fn quadrature_risk(&self, clf: &LinearClassifier, order: usize) -> f64 {
        let (nodes, weights) = math::gauss_hermite(order);
        let class_mean = |mix: &GaussianMixture, y: Label| -> f64 {
            mix.weights()
                .iter()
                .zip(mix.components())
                .map(|(pw, c)| pw * gauss_hermite_expectation(c, &nodes, &weights, |x| self.loss_at(clf, y, x)))
                .sum()
        };
        self.pi * class_mean(&self.minority, Label::Positive)
            + (1.0 - self.pi) * class_mean(&self.majority, Label::Negative)
    }

    fn loss_at(&self, clf: &LinearClassifier, y: Label, x: &[f64]) -> f64 {
        self.loss.margin_derivs(Link::Logistic, y, clf.margin(x)).value
    }

    /// Monte Carlo population risk and its gradient in `(w, b)`, from one set
    /// of stratified draws so that nearby classifiers share random numbers.
    pub fn population_risk_grad(&self, clf: &LinearClassifier, n: usize, seed: u64) -> Result<RiskGradient> {
        clf.check_dim(self.dim())?;
        if n < 2 {
            return Err(Error::Invalid("Monte Carlo needs at least 2 draws per class".into()));
        }
        let mut rp = rng::substream(seed, streams::MONTE_CARLO, 1);
        let mut rq = rng::substream(seed, streams::MONTE_CARLO, 2);
        let d = self.dim();
        let mut grad = vec![0.0; d + 1];
        let mut value = 0.0;
        let mut var = 0.0;
        for (mix, y, prior, rng) in [
            (&self.minority, Label::Positive, self.pi, &mut rp),
            (&self.majority, Label::Negative, 1.0 - self.pi, &mut rq),
        ] {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let x = mix.sample(rng);
                let ld = self.loss.margin_derivs(Link::Logistic, y, clf.margin(&x));
                sum += ld.value;
                sum_sq += ld.value * ld.value;
                let scale = prior * ld.d1 / n as f64;
                for (g, xi) in grad.iter_mut().zip(&x) {
                    *g += scale * xi;
                }
                grad[d] += scale;
            }
            let nf = n as f64;
            let mean = sum / nf;
            let sample_var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            value += prior * mean;
            var += prior * prior * sample_var / nf;
        }
        Ok(RiskGradient {
            value,
            std_error: var.sqrt(),
            grad,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    pub value: f64,
    pub std_error: f64,
    /// `∂/∂w` followed by `∂/∂b`.
    pub grad: Vec<f64>,
}

/// `E f(X)` for `X ~ N(μ, Σ)` by a tensor Gauss–Hermite rule (`d ≤ 2`).
pub fn gauss_hermite_expectation(
    g: &Gaussian,
    nodes: &[f64],
    weights: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let l = g.chol_factor();
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mu = g.mean();
    match g.dim() {
        1 => nodes
            .iter()
            .zip(weights)
            .map(|(z, w)| w * inv_sqrt_pi * f(&[mu[0] + sqrt2 * l[(0, 0)] * z]))
            .sum(),
        2 => {
            let mut acc = 0.0;
            for (z1, w1) in nodes.iter().zip(weights) {
                for (z2, w2) in nodes.iter().zip(weights) {
                    let x = [
                        mu[0] + sqrt2 * l[(0, 0)] * z1,
                        mu[1] + sqrt2 * (l[(1, 0)] * z1 + l[(1, 1)] * z2),
                    ];
                    acc += w1 * w2 * inv_sqrt_pi * inv_sqrt_pi * f(&x);
                }
            }
            acc
        }
        d => panic!("tensor quadrature is limited to d <= 2, got {d}"),
    }
}

/// The two-dimensional layout with two clusters per class: majority at
/// `(2, ±2)` with identity covariances, minority at `(-2, ±2)` with
/// covariances `diag(0.5, 5)` and `diag(5, 0.5)`, equal cluster weights.
pub fn two_cluster_mixtures() -> (GaussianMixture, GaussianMixture) {
    let minority = GaussianMixture::from_params(
        vec![0.5, 0.5],
        vec![vec![-2.0, 2.0], vec![-2.0, -2.0]],
        vec![
            vec![vec![0.5, 0.0], vec![0.0, 5.0]],
            vec![vec![5.0, 0.0], vec![0.0, 0.5]],
        ],
    )
    .expect("valid preset");
    let majority = GaussianMixture::from_params(
        vec![0.5, 0.5],
        vec![vec![2.0, 2.0], vec![2.0, -2.0]],
        vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ],
    )
    .expect("valid preset");
    (minority, majority)
}
