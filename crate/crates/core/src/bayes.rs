//! Pointwise Bayes risk, f-functions and statistical information.

use crate::error::{Error, Result};
use crate::gaussmix::Task;
use crate::loss::{risk_at, LinkPoint, LossFamily, LossSpec};
use crate::math;
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesRiskResult {
    pub eta: f64,
    pub minimizer: f64,
    pub value: f64,
}

/// Absolute tolerance of the golden-section search, in logit units.
pub const GOLDEN_TOL: f64 = 1e-10;

pub const DEFAULT_T_GRID: [f64; 13] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0, 5.0];
pub const DEFAULT_PI_GRID: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: v,
            domain: "[0, 1]",
        })
    }
}

/// `L̲(η) = inf_ŷ L(η, ŷ)`.
pub fn pointwise_bayes_risk(spec: &LossSpec, eta: f64) -> Result<BayesRiskResult> {
    check_unit("eta", eta)?;
    spec.validate()?;
    Ok(bayes_risk_unchecked(spec, eta))
}

fn binary_entropy(eta: f64) -> f64 {
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    -xlogx(eta) - xlogx(1.0 - eta)
}

fn bayes_risk_unchecked(spec: &LossSpec, eta: f64) -> BayesRiskResult {
    let closed = |minimizer, value| BayesRiskResult { eta, minimizer, value };
    if eta == 0.0 || eta == 1.0 {
        return closed(eta, 0.0);
    }
    match spec.family {
        LossFamily::Ce => closed(eta, binary_entropy(eta)),
        LossFamily::Alpha if spec.alpha == 1.0 => closed(eta, binary_entropy(eta)),
        LossFamily::Square => closed(eta, eta * (1.0 - eta)),
        LossFamily::Alpha => {
            let a = spec.alpha;
            let lo = eta.min(1.0 - eta);
            // (η^α + (1-η)^α)^{1/α} - 1, with the small side kept in log space
            let ln_lo = lo.ln();
            let ln_hi = (-lo).ln_1p();
            let inner = (a * ln_hi).exp_m1() + (a * ln_lo).exp();
            let value = a / (1.0 - a) * (inner.ln_1p() / a).exp_m1();
            let minimizer = 1.0 / (1.0 + (a * ((1.0 - eta).ln() - eta.ln())).exp());
            closed(minimizer, value.max(0.0))
        }
        _ => golden_section(spec, eta),
    }
}

fn golden_section(spec: &LossSpec, eta: f64) -> BayesRiskResult {
    let clip = math::margin_clip();
    let f = |m: f64| risk_at(spec, eta, &LinkPoint::from_margin(m));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-clip, clip);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (m, value) = [(c, fc), (d, fd), (a, f(a)), (b, f(b))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty");
    BayesRiskResult {
        eta,
        minimizer: math::sigmoid(m),
        value,
    }
}

fn check_pi_t(pi: f64, t: f64) -> Result<()> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain {
            what: "pi",
            value: pi,
            domain: "(0, 1)",
        });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            what: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    Ok(())
}

/// `f^π(t) = L̲(π) - (πt + 1 - π) L̲(πt / (πt + 1 - π))`.
///
/// Nonnegative on `[0, 1]`; for `t > 1` the value is negative, as are the
/// `(1 - t)` asymptotic forms.
pub fn f_exact(spec: &LossSpec, pi: f64, t: f64) -> Result<f64> {
    check_pi_t(pi, t)?;
    spec.validate()?;
    if t == 1.0 {
        return Ok(0.0);
    }
    let scale = pi * t + 1.0 - pi;
    let eta = pi * t / scale;
    let base = bayes_risk_unchecked(spec, pi).value;
    let f = base - scale * bayes_risk_unchecked(spec, eta).value;
    // only rounding can push f below zero on [0, 1)
    Ok(if t < 1.0 { f.max(0.0) } else { f })
}

/// Leading-order f-function as `π → 0`.
pub fn f_asymptotic(spec: &LossSpec, pi: f64, t: f64) -> Result<f64> {
    check_pi_t(pi, t)?;
    spec.validate()?;
    let ce = -pi * pi.ln() * (1.0 - t);
    let alpha_form = |a: f64| {
        if a == 1.0 {
            ce
        } else {
            pi.powf(a) * (1.0 - t.powf(a)) / (1.0 - a)
        }
    };
    Ok(match spec.family {
        LossFamily::Ce | LossFamily::Poly => ce,
        LossFamily::Square => pi * (1.0 - t),
        LossFamily::Focal => ce / (spec.gamma + 1.0),
        LossFamily::Vs => spec.delta1 * ce,
        LossFamily::Alpha => alpha_form(spec.alpha),
        LossFamily::Tbl => (-spec.alpha * spec.cpen).exp() * alpha_form(spec.alpha),
        LossFamily::Erf => return Err(Error::UnsupportedFamily("erf")),
    })
}

/// `f_exact / f_asymptotic` along a decreasing sequence of priors. The ratio
/// at `t = 1` is 1 by convention.
pub fn verify_uic_limit(spec: &LossSpec, t: f64, pi_sequence: &[f64]) -> Result<Vec<f64>> {
    if spec.family == LossFamily::Erf {
        return Err(Error::UnsupportedFamily("erf"));
    }
    if pi_sequence.is_empty() {
        return Err(Error::Empty("pi sequence"));
    }
    if let Some(&bad) = pi_sequence.iter().find(|p| !(**p > 0.0 && **p < 0.1)) {
        return Err(Error::Domain {
            what: "pi",
            value: bad,
            domain: "(0, 0.1)",
        });
    }
    if pi_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("pi sequence must be strictly decreasing".into()));
    }
    pi_sequence
        .iter()
        .map(|&pi| {
            if t == 1.0 {
                check_pi_t(pi, t)?;
                return Ok(1.0);
            }
            Ok(f_exact(spec, pi, t)? / f_asymptotic(spec, pi, t)?)
        })
        .collect()
}

/// Sampled exact and asymptotic f-functions over a `(π, t)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FCurve {
    pub spec: LossSpec,
    pub pi_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `exact[i][j] = f^{π_i}(t_j)`.
    pub exact: Vec<Vec<f64>>,
    /// `None` for families without an asymptotic form.
    pub asymptotic: Option<Vec<Vec<f64>>>,
}

impl FCurve {
    pub fn compute(spec: &LossSpec, pi_grid: &[f64], t_grid: &[f64]) -> Result<Self> {
        let exact = pi_grid
            .iter()
            .map(|&pi| t_grid.iter().map(|&t| f_exact(spec, pi, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let asymptotic = if spec.family == LossFamily::Erf {
            None
        } else {
            Some(
                pi_grid
                    .iter()
                    .map(|&pi| {
                        t_grid
                            .iter()
                            .map(|&t| f_asymptotic(spec, pi, t))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        Ok(FCurve {
            spec: *spec,
            pi_grid: pi_grid.to_vec(),
            t_grid: t_grid.to_vec(),
            exact,
            asymptotic,
        })
    }

    /// `exact / asymptotic`, with 1 wherever both vanish.
    pub fn ratios(&self) -> Option<Vec<Vec<f64>>> {
        let asym = self.asymptotic.as_ref()?;
        Some(
            self.exact
                .iter()
                .zip(asym)
                .map(|(e, a)| {
                    e.iter()
                        .zip(a)
                        .zip(&self.t_grid)
                        .map(|((e, a), t)| if *t == 1.0 { 1.0 } else { e / a })
                        .collect()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatInfo {
    /// `∫ f^π(dP/dQ) dQ`.
    pub value: f64,
    pub std_error: f64,
    /// `L̲(π) - E L̲(η(x))`.
    pub dual_value: f64,
    pub dual_std_error: f64,
}

struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn new() -> Self {
        Moments {
            n: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    /// Variance of the mean.
    fn var_mean(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq - self.n * m * m) / (self.n - 1.0)).max(0.0) / self.n
    }
}

/// Statistical information of `task` under `task.loss`.
///
/// Half of the draws come from `P` and half from `Q`. The primary estimate
/// integrates `f^π(p/q)` against `Q` with importance weights `q / (½(p + q))`;
/// the dual estimate averages `L̲(η(x))` over the stratified class draws.
pub fn statistical_information(task: &Task, mc_samples: usize, seed: u64) -> Result<StatInfo> {
    if mc_samples < 1000 {
        return Err(Error::Invalid(format!("mc_samples must be >= 1000, got {mc_samples}")));
    }
    let spec = task.loss;
    let pi = task.pi;
    let ln_rho = task.rho.ln();
    let base = bayes_risk_unchecked(&spec, pi).value;
    let n_half = mc_samples / 2;
    let mut primary = [Moments::new(), Moments::new()];
    let mut dual = [Moments::new(), Moments::new()];
    for (k, mix) in [&task.minority, &task.majority].into_iter().enumerate() {
        let mut rng = rng::substream(seed, streams::MONTE_CARLO, 10 + k as u64);
        for _ in 0..n_half {
            let x = mix.sample(&mut rng);
            let lr = task.minority.log_density(&x)? - task.majority.log_density(&x)?;
            let (f, lb) = if lr == 0.0 {
                (0.0, base)
            } else {
                let eta = math::sigmoid(ln_rho + lr);
                let lb = bayes_risk_unchecked(&spec, eta).value;
                // πt + 1 - π = (1 - π)(1 + ρt)
                let scale = ((-pi).ln_1p() + math::softplus(ln_rho + lr)).exp();
                (base - scale * lb, lb)
            };
            // q / (½(p + q)) = 2 / (1 + t)
            let w = 2.0 * math::sigmoid(-lr);
            let g = f * w;
            if !g.is_finite() || !lb.is_finite() {
                return Err(Error::Invalid("non-finite statistical-information integrand".into()));
            }
            primary[k].push(g);
            dual[k].push(lb);
        }
    }
    let value = 0.5 * (primary[0].mean() + primary[1].mean());
    let std_error = (0.25 * (primary[0].var_mean() + primary[1].var_mean())).sqrt();
    let dual_value = base - (pi * dual[0].mean() + (1.0 - pi) * dual[1].mean());
    let dual_std_error = (pi * pi * dual[0].var_mean() + (1.0 - pi).powi(2) * dual[1].var_mean()).sqrt();
    Ok(StatInfo {
        value,
        std_error,
        dual_value,
        dual_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let r = pointwise_bayes_risk(&LossSpec::ce(), 0.5).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.minimizer, 0.5);
        let r = pointwise_bayes_risk(&LossSpec::square(), 0.25).unwrap();
        assert_eq!(r.value, 0.1875);
        assert_eq!(r.minimizer, 0.25);
        assert!(pointwise_bayes_risk(&LossSpec::ce(), 1.2).is_err());
    }

    #[test]
    fn alpha_closed_form_matches_search() {
        for &a in &[0.3, 0.5, 0.8, 0.95] {
            let spec = LossSpec::alpha(a);
            for &eta in &[1e-6, 0.01, 0.3, 0.5, 0.9] {
                let closed = bayes_risk_unchecked(&spec, eta);
                let searched = golden_section(&spec, eta);
                assert!(
                    (closed.value - searched.value).abs() <= 1e-9 * closed.value.max(1e-300),
                    "{a} {eta}: {} vs {}",
                    closed.value,
                    searched.value
                );
                assert!((closed.minimizer / searched.minimizer - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn focal_minimizer_at_small_eta() {
        let r = pointwise_bayes_risk(&LossSpec::focal(1.0), 1e-4).unwrap();
        let expect = (5e-5f64).sqrt();
        assert!((r.minimizer / expect - 1.0).abs() < 0.1, "{}", r.minimizer);
    }

    #[test]
    fn f_exact_examples() {
        for fam in LossFamily::ALL {
            assert_eq!(f_exact(&LossSpec::new(fam), 0.01, 1.0).unwrap(), 0.0);
        }
        let sq = f_exact(&LossSpec::square(), 1e-3, 0.0).unwrap();
        assert!((sq / 1e-3 - 1.0).abs() < 2e-3);
        let ce = f_exact(&LossSpec::ce(), 1e-6, 0.5).unwrap() / f_asymptotic(&LossSpec::ce(), 1e-6, 0.5).unwrap();
        assert!((ce - 1.0).abs() < 0.05, "{ce}");
        assert!(f_exact(&LossSpec::ce(), 0.0, 0.5).is_err());
        assert!(f_exact(&LossSpec::ce(), 0.1, -1.0).is_err());
    }

    #[test]
    fn f_asymptotic_examples() {
        assert!((f_asymptotic(&LossSpec::square(), 0.01, 0.25).unwrap() - 0.0075).abs() < 1e-15);
        assert!((f_asymptotic(&LossSpec::alpha(0.5), 1e-4, 0.0).unwrap() - 0.02).abs() < 1e-15);
        for fam in LossFamily::ALL {
            let spec = LossSpec::new(fam);
            match f_asymptotic(&spec, 1e-3, 1.0) {
                Ok(v) => assert_eq!(v, 0.0),
                Err(e) => assert_eq!(e, Error::UnsupportedFamily("erf")),
            }
        }
    }

    #[test]
    fn uic_limit_examples() {
        let r = verify_uic_limit(&LossSpec::ce(), 0.5, &[1e-4, 1e-8]).unwrap();
        assert!((r[1] - 1.0).abs() < 0.05);
        let r = verify_uic_limit(&LossSpec::alpha(0.8), 0.2, &[1e-3, 1e-8]).unwrap();
        assert!((r[1] - 1.0).abs() < 0.05, "{r:?}");
        assert_eq!(verify_uic_limit(&LossSpec::square(), 1.0, &[1e-3]).unwrap(), vec![1.0]);
        assert!(verify_uic_limit(&LossSpec::ce(), 0.5, &[1e-4, 1e-3]).is_err());
        assert!(verify_uic_limit(&LossSpec::erf(), 0.5, &[1e-4]).is_err());
    }
}
