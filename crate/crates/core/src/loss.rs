//! Binary classification losses `ℓ(y, ŷ)` with analytic first and second
//! derivatives in `ŷ`, the pointwise risk, and the margin form obtained by
//! composing with a link.
//!
//! Every family is evaluated from a [`LinkPoint`] carrying `p = ŷ`,
//! `q = 1 - ŷ` and their logarithms, so that the margin form can feed in
//! `ln σ(m)` and `ln σ(-m)` without cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, EPS_CLIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    Ce,
    Square,
    Erf,
    Focal,
    Poly,
    Vs,
    Alpha,
    Tbl,
}

impl LossFamily {
    pub const ALL: [LossFamily; 8] = [
        LossFamily::Ce,
        LossFamily::Square,
        LossFamily::Erf,
        LossFamily::Focal,
        LossFamily::Poly,
        LossFamily::Vs,
        LossFamily::Alpha,
        LossFamily::Tbl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Ce => "ce",
            LossFamily::Square => "square",
            LossFamily::Erf => "erf",
            LossFamily::Focal => "focal",
            LossFamily::Poly => "poly",
            LossFamily::Vs => "vs",
            LossFamily::Alpha => "alpha",
            LossFamily::Tbl => "tbl",
        }
    }

    /// Families with `ℓ(1, ŷ) = ℓ(0, 1 - ŷ)`.
    pub fn is_symmetric(self) -> bool {
        self != LossFamily::Vs
    }
}

impl std::fmt::Display for LossFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown loss family `{s}`")))
    }
}

/// Binary label. `Positive` (y = 1) is the minority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_u8(y: u8) -> Result<Self> {
        match y {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            _ => Err(Error::Domain {
                what: "label",
                value: y as f64,
                domain: "{0, 1}",
            }),
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn value(self) -> f64 {
        self as u8 as f64
    }

    /// The ±1 encoding used by margin losses.
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// How a real-valued margin `m = wᵀx + b` becomes a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `ŷ = σ(m)`; valid for every family.
    #[default]
    Logistic,
    /// Least-squares regression on ±1 targets, `(y± - m)²`. Square loss only.
    Identity,
}

/// A loss family plus its hyperparameters. Fields that do not belong to
/// `family` are ignored by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLossSpec", into = "RawLossSpec")]
pub struct LossSpec {
    pub family: LossFamily,
    /// Focal γ ≥ 0.
    pub gamma: f64,
    /// Poly ε.
    pub epsilon: f64,
    /// VS multiplicative factor δ₁ ∈ (0, 1] (δ₀ = 1, no additive term).
    pub delta1: f64,
    /// Alpha / TBL α ∈ (0, 1]; α = 1 is cross entropy.
    pub alpha: f64,
    /// TBL penalty C ≥ 0.
    pub cpen: f64,
}

pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = -0.5;
pub const DEFAULT_DELTA1: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_CPEN: f64 = 0.5;

impl LossSpec {
    pub fn new(family: LossFamily) -> Self {
        LossSpec {
            family,
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
            delta1: DEFAULT_DELTA1,
            alpha: DEFAULT_ALPHA,
            cpen: DEFAULT_CPEN,
        }
    }

    pub fn ce() -> Self {
        Self::new(LossFamily::Ce)
    }

    pub fn square() -> Self {
        Self::new(LossFamily::Square)
    }

    pub fn erf() -> Self {
        Self::new(LossFamily::Erf)
    }

    pub fn focal(gamma: f64) -> Self {
        LossSpec {
            gamma,
            ..Self::new(LossFamily::Focal)
        }
    }

    pub fn poly(epsilon: f64) -> Self {
        LossSpec {
            epsilon,
            ..Self::new(LossFamily::Poly)
        }
    }

    pub fn vs(delta1: f64) -> Self {
        LossSpec {
            delta1,
            ..Self::new(LossFamily::Vs)
        }
    }

    pub fn alpha(alpha: f64) -> Self {
        LossSpec {
            alpha,
            ..Self::new(LossFamily::Alpha)
        }
    }

    pub fn tbl(alpha: f64, cpen: f64) -> Self {
        LossSpec {
            alpha,
            cpen,
            ..Self::new(LossFamily::Tbl)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family.name();
        let bad = |name, value, expected| {
            Err(Error::Hyperparameter {
                family: fam,
                name,
                value,
                expected,
            })
        };
        match self.family {
            LossFamily::Ce | LossFamily::Square | LossFamily::Erf => Ok(()),
            LossFamily::Focal if !(self.gamma >= 0.0 && self.gamma.is_finite()) => {
                bad("gamma", self.gamma, "finite and >= 0")
            }
            LossFamily::Poly if !self.epsilon.is_finite() => bad("epsilon", self.epsilon, "finite"),
            LossFamily::Vs if !(self.delta1 > 0.0 && self.delta1 <= 1.0) => bad("delta1", self.delta1, "in (0, 1]"),
            LossFamily::Alpha | LossFamily::Tbl if !(self.alpha > 0.0 && self.alpha <= 1.0) => {
                bad("alpha", self.alpha, "in (0, 1]")
            }
            LossFamily::Tbl if !(self.cpen >= 0.0 && self.cpen.is_finite()) => {
                bad("cpen", self.cpen, "finite and >= 0")
            }
            _ => Ok(()),
        }
    }

    /// Short human-readable tag, e.g. `focal(gamma=1)`.
    pub fn label(&self) -> String {
        match self.family {
            LossFamily::Ce | LossFamily::Square | LossFamily::Erf => self.family.name().to_string(),
            LossFamily::Focal => format!("focal(gamma={})", self.gamma),
            LossFamily::Poly => format!("poly(epsilon={})", self.epsilon),
            LossFamily::Vs => format!("vs(delta1={})", self.delta1),
            LossFamily::Alpha => format!("alpha(alpha={})", self.alpha),
            LossFamily::Tbl => format!("tbl(alpha={},cpen={})", self.alpha, self.cpen),
        }
    }

    /// The hyperparameters relevant to the family, as `(name, value)` pairs.
    pub fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        match self.family {
            LossFamily::Ce | LossFamily::Square | LossFamily::Erf => vec![],
            LossFamily::Focal => vec![("gamma", self.gamma)],
            LossFamily::Poly => vec![("epsilon", self.epsilon)],
            LossFamily::Vs => vec![("delta1", self.delta1)],
            LossFamily::Alpha => vec![("alpha", self.alpha)],
            LossFamily::Tbl => vec![("alpha", self.alpha), ("cpen", self.cpen)],
        }
    }

    /// Loss and its derivatives with respect to the margin, for training.
    /// The spec is assumed to be valid; call [`LossSpec::validate`] once up front.
    pub fn margin_derivs(&self, link: Link, y: Label, margin: f64) -> LossDerivs {
        match link {
            Link::Identity => {
                let r = margin - y.sign();
                LossDerivs {
                    value: r * r,
                    d1: 2.0 * r,
                    d2: 2.0,
                }
            }
            Link::Logistic => {
                let clip = math::margin_clip();
                let clamped = margin.clamp(-clip, clip);
                let pt = LinkPoint::from_margin(clamped);
                let d = self.derivs_at(y, &pt);
                if clamped != margin {
                    return LossDerivs {
                        value: d.value,
                        d1: 0.0,
                        d2: 0.0,
                    };
                }
                let pq = pt.p * pt.q;
                LossDerivs {
                    value: d.value,
                    d1: d.d1 * pq,
                    d2: d.d2 * pq * pq + d.d1 * pq * (pt.q - pt.p),
                }
            }
        }
    }

    pub(crate) fn derivs_at(&self, y: Label, pt: &LinkPoint) -> LossDerivs {
        match (self.family, y) {
            (LossFamily::Vs, Label::Negative) => LossDerivs {
                value: -pt.ln_q,
                d1: 1.0 / pt.q,
                d2: 1.0 / (pt.q * pt.q),
            },
            (_, Label::Positive) => self.positive_branch(pt),
            (_, Label::Negative) => {
                let d = self.positive_branch(&pt.swapped());
                LossDerivs {
                    value: d.value,
                    d1: -d.d1,
                    d2: d.d2,
                }
            }
        }
    }

    /// `ℓ(1, p)` and its first two derivatives in `p`.
    fn positive_branch(&self, pt: &LinkPoint) -> LossDerivs {
        let LinkPoint { p, q, ln_p, ln_q } = *pt;
        match self.family {
            LossFamily::Ce => cross_entropy(p, ln_p),
            LossFamily::Square => LossDerivs {
                value: q * q,
                d1: -2.0 * q,
                d2: 2.0,
            },
            LossFamily::Erf => {
                // u = ln((1 - ŷ)/ŷ); ℓ(1, ŷ) = uΨ(u) + Ψ′(u)
                let u = ln_q - ln_p;
                let pq = p * q;
                let cdf = math::std_normal_cdf(u);
                LossDerivs {
                    value: math::gaussian_hinge(u),
                    d1: -cdf / pq,
                    d2: (math::std_normal_pdf(u) + cdf * (q - p)) / (pq * pq),
                }
            }
            LossFamily::Focal => {
                let g = self.gamma;
                let qg = q.powf(g);
                let (qg1, qg2) = if g == 0.0 {
                    (0.0, 0.0)
                } else {
                    (g * q.powf(g - 1.0), g * (g - 1.0) * q.powf(g - 2.0))
                };
                LossDerivs {
                    value: -qg * ln_p,
                    d1: qg1 * ln_p - qg / p,
                    d2: -qg2 * ln_p + 2.0 * qg1 / p + qg / (p * p),
                }
            }
            LossFamily::Poly => LossDerivs {
                value: -ln_p + self.epsilon * q,
                d1: -1.0 / p - self.epsilon,
                d2: 1.0 / (p * p),
            },
            LossFamily::Vs => {
                let d = self.delta1;
                let v = d * (ln_q - ln_p);
                let pq = p * q;
                let s = math::sigmoid(v);
                LossDerivs {
                    value: math::softplus(v),
                    d1: -d * s / pq,
                    d2: (d * d * s * math::sigmoid(-v) + d * s * (q - p)) / (pq * pq),
                }
            }
            LossFamily::Alpha => alpha_branch(self.alpha, p, ln_p),
            LossFamily::Tbl => {
                let a = alpha_branch(self.alpha, p, ln_p);
                let c = self.cpen;
                // e^{C(ŷ-1)} = e^{-Cq}
                let pen = (-c * q).exp();
                LossDerivs {
                    value: a.value * pen,
                    d1: (a.d1 + c * a.value) * pen,
                    d2: (a.d2 + 2.0 * c * a.d1 + c * c * a.value) * pen,
                }
            }
        }
    }
}

fn cross_entropy(p: f64, ln_p: f64) -> LossDerivs {
    LossDerivs {
        value: -ln_p,
        d1: -1.0 / p,
        d2: 1.0 / (p * p),
    }
}

/// `α/(α-1)·(1 - p^{1-1/α})`, evaluated as `-expm1(s ln p)/s` with `s = 1 - 1/α`
/// so that α → 1 approaches cross entropy smoothly. α = 1 is cross entropy.
fn alpha_branch(alpha: f64, p: f64, ln_p: f64) -> LossDerivs {
    if alpha == 1.0 {
        return cross_entropy(p, ln_p);
    }
    let s = 1.0 - 1.0 / alpha;
    // p^{s-1} = p^{-1/α}
    let p_s1 = ((s - 1.0) * ln_p).exp();
    LossDerivs {
        value: -(s * ln_p).exp_m1() / s,
        d1: -p_s1,
        d2: p_s1 / (alpha * p),
    }
}

/// Loss value and derivatives with respect to the prediction (or margin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A clamped probability with its complement and both logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinkPoint {
    pub p: f64,
    pub q: f64,
    pub ln_p: f64,
    pub ln_q: f64,
}

impl LinkPoint {
    pub fn from_prob(etahat: f64) -> Self {
        let p = etahat.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
        let q = 1.0 - p;
        let ln_p = if p < 0.5 { p.ln() } else { (-q).ln_1p() };
        let ln_q = if p < 0.5 { (-p).ln_1p() } else { q.ln() };
        LinkPoint { p, q, ln_p, ln_q }
    }

    pub fn from_margin(m: f64) -> Self {
        LinkPoint {
            p: math::sigmoid(m),
            q: math::sigmoid(-m),
            ln_p: math::log_sigmoid(m),
            ln_q: math::log_sigmoid(-m),
        }
    }

    fn swapped(&self) -> Self {
        LinkPoint {
            p: self.q,
            q: self.p,
            ln_p: self.ln_q,
            ln_q: self.ln_p,
        }
    }
}

fn check_prob(what: &'static str, v: f64) -> Result<()> {
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

/// `ℓ(y, ŷ)` with its first and second derivatives in `ŷ`.
pub fn loss_derivs(spec: &LossSpec, y: Label, etahat: f64) -> Result<LossDerivs> {
    check_prob("etahat", etahat)?;
    spec.validate()?;
    Ok(spec.derivs_at(y, &LinkPoint::from_prob(etahat)))
}

pub fn loss_value(spec: &LossSpec, y: Label, etahat: f64) -> Result<f64> {
    loss_derivs(spec, y, etahat).map(|d| d.value)
}

/// `∂ℓ/∂ŷ`.
pub fn loss_grad(spec: &LossSpec, y: Label, etahat: f64) -> Result<f64> {
    loss_derivs(spec, y, etahat).map(|d| d.d1)
}

/// `∂²ℓ/∂ŷ²`.
pub fn loss_hess(spec: &LossSpec, y: Label, etahat: f64) -> Result<f64> {
    loss_derivs(spec, y, etahat).map(|d| d.d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseRisk {
    pub eta: f64,
    pub etahat: f64,
    pub value: f64,
}

/// `L(η, ŷ) = (1 - η)ℓ(0, ŷ) + ηℓ(1, ŷ)`.
pub fn pointwise_risk(spec: &LossSpec, eta: f64, etahat: f64) -> Result<PointwiseRisk> {
    check_prob("eta", eta)?;
    check_prob("etahat", etahat)?;
    spec.validate()?;
    Ok(PointwiseRisk {
        eta,
        etahat,
        value: risk_at(spec, eta, &LinkPoint::from_prob(etahat)),
    })
}

pub(crate) fn risk_at(spec: &LossSpec, eta: f64, pt: &LinkPoint) -> f64 {
    let l0 = spec.derivs_at(Label::Negative, pt).value;
    let l1 = spec.derivs_at(Label::Positive, pt).value;
    (1.0 - eta) * l0 + eta * l1
}

/// `ℓ(y, σ(margin))`.
pub fn margin_loss_value(spec: &LossSpec, y: Label, margin: f64) -> Result<f64> {
    if !margin.is_finite() {
        return Err(Error::Domain {
            what: "margin",
            value: margin,
            domain: "finite reals",
        });
    }
    spec.validate()?;
    Ok(spec.margin_derivs(Link::Logistic, y, margin).value)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLossSpec {
    family: Option<LossFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cpen: Option<f64>,
}

impl TryFrom<RawLossSpec> for LossSpec {
    type Error = Error;

    fn try_from(raw: RawLossSpec) -> Result<Self> {
        let family = raw
            .family
            .ok_or_else(|| Error::Invalid("loss spec is missing `family`".into()))?;
        let spec = LossSpec {
            family,
            gamma: raw.gamma.unwrap_or(DEFAULT_GAMMA),
            epsilon: raw.epsilon.unwrap_or(DEFAULT_EPSILON),
            delta1: raw.delta1.unwrap_or(DEFAULT_DELTA1),
            alpha: raw.alpha.unwrap_or(DEFAULT_ALPHA),
            cpen: raw.cpen.unwrap_or(DEFAULT_CPEN),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<LossSpec> for RawLossSpec {
    fn from(s: LossSpec) -> Self {
        let mut raw = RawLossSpec {
            family: Some(s.family),
            ..Default::default()
        };
        for (name, value) in s.hyperparameters() {
            match name {
                "gamma" => raw.gamma = Some(value),
                "epsilon" => raw.epsilon = Some(value),
                "delta1" => raw.delta1 = Some(value),
                "alpha" => raw.alpha = Some(value),
                _ => raw.cpen = Some(value),
            }
        }
        raw
    }
}
