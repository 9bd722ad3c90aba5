//! Limiting linear classifiers as the imbalance ratio `ρ → 0`, for Gaussian
//! mixture class conditionals.
//!
//! The erf and alpha limits are characterized by tilted cluster weights on the
//! probability simplex. Both are computed either by a damped fixed-point
//! iteration or by entropic mirror descent on a strictly convex objective;
//! the two must agree.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmix::{Gaussian, GaussianMixture, Task};
use crate::loss::Label;
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearClassifier {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        LinearClassifier { w, b }
    }

    pub fn zeros(d: usize) -> Self {
        LinearClassifier {
            w: vec![0.0; d],
            b: 0.0,
        }
    }

    /// From the stacked parameter vector `(w, b)`.
    pub fn from_params(theta: &[f64]) -> Self {
        let (b, w) = theta.split_last().expect("parameter vector holds at least b");
        LinearClassifier { w: w.to_vec(), b: *b }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.w.clone();
        p.push(self.b);
        p
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.w.len() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: d,
                got: self.w.len(),
            })
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.margin(x) > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }

    /// Angle between the normal vectors, in degrees.
    pub fn angle_to(&self, other: &LinearClassifier) -> f64 {
        math::angle_deg(&self.w, &other.w)
    }

    /// Orientation of a 2-D normal vector, in degrees in `(-180, 180]`.
    pub fn normal_angle_2d(&self) -> f64 {
        self.w[1].atan2(self.w[0]).to_degrees()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexWeights {
    /// Over majority clusters.
    pub xi_minus: Vec<f64>,
    /// Over minority clusters; alpha program only.
    pub xi_plus: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitResult {
    pub classifier: LinearClassifier,
    pub weights: SimplexWeights,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm defect of the fixed-point equations at the returned weights.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexSolver {
    FixedPoint,
    MirrorDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub damping: f64,
    pub step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 10_000,
            tol: 1e-10,
            damping: 0.5,
            step: 0.1,
        }
    }
}

fn solve_spd(s: &DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    s.clone().cholesky().map(|c| c.solve(rhs)).ok_or(Error::Singular(what))
}

fn check_task_dims(task: &Task) -> Result<()> {
    if task.minority.dim() != task.majority.dim() {
        return Err(Error::DimensionMismatch {
            expected: task.minority.dim(),
            got: task.majority.dim(),
        });
    }
    Ok(())
}

/// Square loss: `w = 2ρ Σ₋⁻¹(μ₊ - μ₋)`, `b = -1`, with `Σ₋` the total
/// majority covariance and `μ±` the mixture means.
pub fn limit_square(task: &Task) -> Result<LimitResult> {
    check_task_dims(task)?;
    let sigma = task.majority.total_covariance();
    let delta = task.minority.mean() - task.majority.mean();
    let w = solve_spd(&sigma, &delta, "majority total covariance")? * (2.0 * task.rho);
    Ok(LimitResult {
        classifier: LinearClassifier::new(w.iter().copied().collect(), -1.0),
        weights: SimplexWeights {
            xi_minus: task.majority.weights().to_vec(),
            xi_plus: None,
        },
        converged: true,
        iterations: 0,
        residual: 0.0,
    })
}

/// A convex program over a product of simplices whose optimum is the fixed
/// point of a tilting map.
trait SimplexProgram {
    fn blocks(&self) -> Vec<usize>;
    fn prior(&self) -> Vec<f64>;
    /// Direction `θ(ξ)`.
    fn theta(&self, xi: &[f64]) -> Result<DVector<f64>>;
    /// Unnormalized log-weights of the tilted clusters at `θ`.
    fn tilt(&self, theta: &DVector<f64>) -> Vec<f64>;
    fn objective(&self, xi: &[f64]) -> Result<f64>;
    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>>;
}

fn normalize_blocks(blocks: &[usize], log_w: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(log_w.len());
    let mut start = 0;
    for &k in blocks {
        out.extend(math::softmax(&log_w[start..start + k]));
        start += k;
    }
    out
}

fn fixed_point_map<P: SimplexProgram>(prog: &P, xi: &[f64]) -> Result<Vec<f64>> {
    let theta = prog.theta(xi)?;
    Ok(normalize_blocks(&prog.blocks(), &prog.tilt(&theta)))
}

fn defect<P: SimplexProgram>(prog: &P, xi: &[f64]) -> Result<f64> {
    let next = fixed_point_map(prog, xi)?;
    Ok(next.iter().zip(xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

struct SolveOutcome {
    xi: Vec<f64>,
    converged: bool,
    iterations: usize,
    residual: f64,
}

/// Log-ratios `ln ξⱼ - ln ξ₀` within each block.
fn reduce(blocks: &[usize], xi: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut start = 0;
    for &k in blocks {
        let l0 = xi[start].ln();
        out.extend(xi[start + 1..start + k].iter().map(|x| x.ln() - l0));
        start += k;
    }
    out
}

fn expand(blocks: &[usize], r: &[f64]) -> Vec<f64> {
    let mut logits = Vec::new();
    let mut start = 0;
    for &k in blocks {
        logits.push(0.0);
        logits.extend_from_slice(&r[start..start + k - 1]);
        start += k - 1;
    }
    normalize_blocks(blocks, &logits)
}

/// Fixed-point equations in reduced log-ratio coordinates: `ln T(ξ) - ln ξ`.
fn reduced_residual<P: SimplexProgram>(prog: &P, blocks: &[usize], r: &[f64]) -> Result<DVector<f64>> {
    let theta = prog.theta(&expand(blocks, r))?;
    let tilt = prog.tilt(&theta);
    let mut out = Vec::with_capacity(r.len());
    let (mut start, mut ri) = (0, 0);
    for &k in blocks {
        for j in 1..k {
            out.push(tilt[start + j] - tilt[start] - r[ri]);
            ri += 1;
        }
        start += k;
    }
    Ok(DVector::from_vec(out))
}

/// Damped iteration `ξ ← (1-δ)ξ + δT(ξ)` while it reduces the defect; once it
/// stops doing so the same equations are finished by Newton's method with a
/// finite-difference Jacobian and backtracking on the defect.
fn solve_fixed_point<P: SimplexProgram>(prog: &P, opts: &SolverOptions) -> Result<SolveOutcome> {
    let blocks = prog.blocks();
    let mut r = reduce(&blocks, &prog.prior());
    let mut best = (f64::INFINITY, expand(&blocks, &r));
    let mut picard = true;
    for it in 0..opts.max_iter {
        let xi = expand(&blocks, &r);
        let res = defect(prog, &xi)?;
        if res < best.0 {
            best = (res, xi.clone());
        }
        if res < opts.tol {
            return Ok(SolveOutcome {
                xi,
                converged: true,
                iterations: it,
                residual: res,
            });
        }
        if picard {
            let next = fixed_point_map(prog, &xi)?;
            let damped: Vec<f64> = xi
                .iter()
                .zip(&next)
                .map(|(x, n)| (1.0 - opts.damping) * x + opts.damping * n)
                .collect();
            if defect(prog, &damped)? < res {
                r = reduce(&blocks, &damped);
                continue;
            }
            picard = false;
        }
        let g = reduced_residual(prog, &blocks, &r)?;
        let m = r.len();
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let h = 1e-6 * r[j].abs().max(1.0);
            let mut rp = r.clone();
            let mut rm = r.clone();
            rp[j] += h;
            rm[j] -= h;
            let col = (reduced_residual(prog, &blocks, &rp)? - reduced_residual(prog, &blocks, &rm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let Some(step) = jac.full_piv_lu().solve(&(-g)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = r.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Ok(res_t) = defect(prog, &expand(&blocks, &trial)) {
                if res_t < res {
                    r = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(SolveOutcome {
        xi: best.1,
        converged: false,
        iterations: opts.max_iter,
        residual: best.0,
    })
}

/// Entropic mirror descent on `H` with Armijo backtracking. The trial step
/// starts at twice the last accepted one, from `opts.step` initially.
fn solve_mirror_descent<P: SimplexProgram>(prog: &P, opts: &SolverOptions) -> Result<SolveOutcome> {
    let blocks = prog.blocks();
    let mut logits: Vec<f64> = prog.prior().iter().map(|p| p.ln()).collect();
    let mut xi = normalize_blocks(&blocks, &logits);
    let mut h = prog.objective(&xi)?;
    let mut best = (f64::INFINITY, xi.clone());
    let mut last_step = opts.step / 2.0;
    for it in 0..opts.max_iter {
        let res = defect(prog, &xi)?;
        if res < best.0 {
            best = (res, xi.clone());
        }
        if res < opts.tol {
            return Ok(SolveOutcome {
                xi,
                converged: true,
                iterations: it,
                residual: res,
            });
        }
        let g = prog.gradient(&xi)?;
        let mut step = last_step * 2.0;
        loop {
            let trial_logits: Vec<f64> = logits.iter().zip(&g).map(|(l, g)| l - step * g).collect();
            let trial = normalize_blocks(&blocks, &trial_logits);
            let h_trial = prog.objective(&trial);
            let decrease: f64 = g.iter().zip(trial.iter().zip(&xi)).map(|(g, (t, x))| g * (t - x)).sum();
            // near the optimum changes in H fall below rounding; fall back to the defect
            let accept = match h_trial {
                Ok(ht) if ht <= h + 1e-4 * decrease => true,
                Ok(ht) if (ht - h).abs() <= 1e-12 * (1.0 + h.abs()) => defect(prog, &trial)? < res,
                _ => false,
            };
            match h_trial {
                Ok(ht) if accept => {
                    logits = trial_logits;
                    xi = trial;
                    h = ht;
                    last_step = step;
                    break;
                }
                _ if step < 1e-16 => {
                    return Ok(SolveOutcome {
                        xi: best.1,
                        converged: false,
                        iterations: it,
                        residual: best.0,
                    });
                }
                _ => step *= 0.5,
            }
        }
    }
    Ok(SolveOutcome {
        xi: best.1,
        converged: false,
        iterations: opts.max_iter,
        residual: best.0,
    })
}

fn run<P: SimplexProgram>(prog: &P, solver: SimplexSolver, opts: &SolverOptions) -> Result<SolveOutcome> {
    if prog.prior().iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidMixture(
            "limit programs need strictly positive cluster weights".into(),
        ));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Invalid("solver needs tol > 0 and max_iter >= 1".into()));
    }
    match solver {
        SimplexSolver::FixedPoint => solve_fixed_point(prog, opts),
        SimplexSolver::MirrorDescent => solve_mirror_descent(prog, opts),
    }
}

fn xlogx_over(xi: &[f64], prior: &[f64]) -> f64 {
    xi.iter()
        .zip(prior)
        .map(|(x, p)| if *x > 0.0 { x * (x / p).ln() } else { 0.0 })
        .sum()
}

fn quad(theta: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
    (theta.transpose() * s * theta)[(0, 0)]
}

fn weighted_sum<'a>(xi: &[f64], comps: &'a [Gaussian]) -> (DVector<f64>, DMatrix<f64>) {
    let d = comps[0].dim();
    xi.iter()
        .zip(comps)
        .fold((DVector::zeros(d), DMatrix::zeros(d, d)), |(m, s), (x, c)| {
            (m + c.mean() * *x, s + c.cov() * *x)
        })
}

/// Alpha-loss program with `u = 1/α - 1`:
/// `S = Σξ₋Σ₋ + uΣξ₊Σ₊`, `d = Σξ₊μ₊ - Σξ₋μ₋`, `θ = S⁻¹d`.
struct AlphaProgram<'a> {
    minority: &'a GaussianMixture,
    majority: &'a GaussianMixture,
    u: f64,
}

impl AlphaProgram<'_> {
    fn split<'x>(&self, xi: &'x [f64]) -> (&'x [f64], &'x [f64]) {
        xi.split_at(self.majority.len())
    }

    fn system(&self, xi: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let (xm, xp) = self.split(xi);
        let (mm, sm) = weighted_sum(xm, self.majority.components());
        let (mp, sp) = weighted_sum(xp, self.minority.components());
        (sm + sp * self.u, mp - mm)
    }
}

impl SimplexProgram for AlphaProgram<'_> {
    fn blocks(&self) -> Vec<usize> {
        vec![self.majority.len(), self.minority.len()]
    }

    fn prior(&self) -> Vec<f64> {
        [self.majority.weights(), self.minority.weights()].concat()
    }

    fn theta(&self, xi: &[f64]) -> Result<DVector<f64>> {
        let (s, d) = self.system(xi);
        solve_spd(&s, &d, "alpha fixed-point system")
    }

    fn tilt(&self, theta: &DVector<f64>) -> Vec<f64> {
        let u = self.u;
        let minus = self
            .majority
            .weights()
            .iter()
            .zip(self.majority.components())
            .map(|(p, c)| p.ln() + theta.dot(c.mean()) + 0.5 * quad(theta, c.cov()));
        let plus = self
            .minority
            .weights()
            .iter()
            .zip(self.minority.components())
            .map(|(p, c)| p.ln() - u * theta.dot(c.mean()) + 0.5 * u * u * quad(theta, c.cov()));
        minus.chain(plus).collect()
    }

    fn objective(&self, xi: &[f64]) -> Result<f64> {
        let (xm, xp) = self.split(xi);
        let (s, d) = self.system(xi);
        let theta = solve_spd(&s, &d, "alpha fixed-point system")?;
        Ok(xlogx_over(xm, self.majority.weights())
            + xlogx_over(xp, self.minority.weights()) / self.u
            + 0.5 * d.dot(&theta))
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let (xm, xp) = self.split(xi);
        let theta = self.theta(xi)?;
        let u = self.u;
        let ln_ratio = |x: f64, p: f64| x.max(f64::MIN_POSITIVE).ln() - p.ln();
        let minus = xm
            .iter()
            .zip(self.majority.weights())
            .zip(self.majority.components())
            .map(|((x, p), c)| ln_ratio(*x, *p) + 1.0 - theta.dot(c.mean()) - 0.5 * quad(&theta, c.cov()));
        let plus = xp
            .iter()
            .zip(self.minority.weights())
            .zip(self.minority.components())
            .map(|((x, p), c)| (ln_ratio(*x, *p) + 1.0) / u + theta.dot(c.mean()) - 0.5 * u * quad(&theta, c.cov()));
        Ok(minus.chain(plus).collect())
    }
}

/// Erf-loss program: `θ = S̃⁻¹(μ₊ - m̃)` with `S̃ = Σξ Σ₋`, `m̃ = Σξ μ₋`.
struct ErfProgram<'a> {
    majority: &'a GaussianMixture,
    mu_plus: DVector<f64>,
}

impl ErfProgram<'_> {
    fn system(&self, xi: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let (m, s) = weighted_sum(xi, self.majority.components());
        (s, &self.mu_plus - m)
    }
}

impl SimplexProgram for ErfProgram<'_> {
    fn blocks(&self) -> Vec<usize> {
        vec![self.majority.len()]
    }

    fn prior(&self) -> Vec<f64> {
        self.majority.weights().to_vec()
    }

    fn theta(&self, xi: &[f64]) -> Result<DVector<f64>> {
        let (s, d) = self.system(xi);
        solve_spd(&s, &d, "erf fixed-point system")
    }

    fn tilt(&self, theta: &DVector<f64>) -> Vec<f64> {
        self.majority
            .weights()
            .iter()
            .zip(self.majority.components())
            .map(|(p, c)| p.ln() + theta.dot(&(c.mean() - &self.mu_plus)) + 0.5 * quad(theta, c.cov()))
            .collect()
    }

    fn objective(&self, xi: &[f64]) -> Result<f64> {
        let (s, d) = self.system(xi);
        let theta = solve_spd(&s, &d, "erf fixed-point system")?;
        Ok(xlogx_over(xi, self.majority.weights()) + 0.5 * d.dot(&theta))
    }

    fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let theta = self.theta(xi)?;
        Ok(xi
            .iter()
            .zip(self.majority.weights())
            .zip(self.majority.components())
            .map(|((x, p), c)| {
                x.max(f64::MIN_POSITIVE).ln() - p.ln() + 1.0
                    - theta.dot(&(c.mean() - &self.mu_plus))
                    - 0.5 * quad(&theta, c.cov())
            })
            .collect())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

/// Alpha-loss limit solved by the damped fixed-point iteration, falling back
/// to mirror descent when the iteration stalls.
pub fn limit_alpha(task: &Task, alpha: f64, max_iter: usize, tol: f64) -> Result<LimitResult> {
    let opts = SolverOptions {
        max_iter,
        tol,
        ..SolverOptions::default()
    };
    let fp = limit_alpha_with(task, alpha, SimplexSolver::FixedPoint, &opts)?;
    if fp.converged {
        return Ok(fp);
    }
    let md = limit_alpha_with(task, alpha, SimplexSolver::MirrorDescent, &opts)?;
    Ok(if md.residual < fp.residual { md } else { fp })
}

/// Alpha-loss limit `(w, b)` with `b = α(ln ρ + ln A₊ - ln A₋)`, where
/// `A₊ = Σπ₊ exp(-uwᵀμ₊ + ½u²wᵀΣ₊w)` and `A₋ = Σπ₋ exp(wᵀμ₋ + ½wᵀΣ₋w)`.
pub fn limit_alpha_with(task: &Task, alpha: f64, solver: SimplexSolver, opts: &SolverOptions) -> Result<LimitResult> {
    check_alpha(alpha)?;
    check_task_dims(task)?;
    let prog = AlphaProgram {
        minority: &task.minority,
        majority: &task.majority,
        u: 1.0 / alpha - 1.0,
    };
    let out = run(&prog, solver, opts)?;
    let theta = prog.theta(&out.xi)?;
    let tilt = prog.tilt(&theta);
    let k = task.majority.len();
    let ln_a_minus = math::log_sum_exp(&tilt[..k]);
    let ln_a_plus = math::log_sum_exp(&tilt[k..]);
    let b = alpha * (task.rho.ln() + ln_a_plus - ln_a_minus);
    let (xm, xp) = out.xi.split_at(k);
    Ok(LimitResult {
        classifier: LinearClassifier::new(theta.iter().copied().collect(), b),
        weights: SimplexWeights {
            xi_minus: xm.to_vec(),
            xi_plus: Some(xp.to_vec()),
        },
        converged: out.converged,
        iterations: out.iterations,
        residual: out.residual,
    })
}

pub fn limit_erf(task: &Task, max_iter: usize, tol: f64) -> Result<LimitResult> {
    let opts = SolverOptions {
        max_iter,
        tol,
        ..SolverOptions::default()
    };
    let fp = limit_erf_with(task, SimplexSolver::FixedPoint, &opts)?;
    if fp.converged {
        return Ok(fp);
    }
    let md = limit_erf_with(task, SimplexSolver::MirrorDescent, &opts)?;
    Ok(if md.residual < fp.residual { md } else { fp })
}

/// Erf-loss limit: `w = (-2 ln ρ)^{-1/2} S̃⁻¹(μ₊ - m̃)`, `b = -(-2 ln ρ)^{1/2}`.
pub fn limit_erf_with(task: &Task, solver: SimplexSolver, opts: &SolverOptions) -> Result<LimitResult> {
    check_task_dims(task)?;
    if !(task.rho < 1.0) {
        return Err(Error::Domain {
            what: "rho",
            value: task.rho,
            domain: "(0, 1)",
        });
    }
    let prog = ErfProgram {
        majority: &task.majority,
        mu_plus: task.minority.mean(),
    };
    let out = run(&prog, solver, opts)?;
    let theta = prog.theta(&out.xi)?;
    let r = (-2.0 * task.rho.ln()).sqrt();
    Ok(LimitResult {
        classifier: LinearClassifier::new(theta.iter().map(|t| t / r).collect(), -r),
        weights: SimplexWeights {
            xi_minus: out.xi,
            xi_plus: None,
        },
        converged: out.converged,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// `Ψ(wᵀ(μ₊ - μ₋) / √(wᵀ(Σ₊ + Σ₋)w))`, the AUC of score `wᵀx` for two Gaussians.
pub fn two_gaussian_auc(w: &[f64], minority: &Gaussian, majority: &Gaussian) -> Result<f64> {
    let d = minority.dim();
    if w.len() != d || majority.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if w.len() != d { w.len() } else { majority.dim() },
        });
    }
    let w = DVector::from_column_slice(w);
    let var = quad(&w, &(minority.cov() + majority.cov()));
    if var == 0.0 {
        return Ok(0.5);
    }
    Ok(math::std_normal_cdf(
        w.dot(&(minority.mean() - majority.mean())) / var.sqrt(),
    ))
}

/// Unit direction `∝ (Σ₊ + Σ₋)⁻¹(μ₊ - μ₋)` maximizing the two-Gaussian AUC,
/// with that AUC. Returns `w = 0` and 0.5 when the means coincide.
pub fn optimal_auc_direction(minority: &Gaussian, majority: &Gaussian) -> Result<(Vec<f64>, f64)> {
    if minority.dim() != majority.dim() {
        return Err(Error::DimensionMismatch {
            expected: minority.dim(),
            got: majority.dim(),
        });
    }
    let delta = minority.mean() - majority.mean();
    let w = solve_spd(&(minority.cov() + majority.cov()), &delta, "summed class covariances")?;
    let norm = w.norm();
    if norm == 0.0 {
        return Ok((vec![0.0; w.len()], 0.5));
    }
    let w: Vec<f64> = w.iter().map(|v| v / norm).collect();
    let auc = two_gaussian_auc(&w, minority, majority)?;
    Ok((w, auc))
}
