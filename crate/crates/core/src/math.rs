//! Scalar numerics shared by every module: the standard normal CDF/density,
//! logistic link helpers, log-sum-exp and Gauss–Hermite rules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Probability estimates are clamped to `[EPS_CLIP, 1 - EPS_CLIP]` before any
/// log or power is taken.
pub const EPS_CLIP: f64 = 1e-12;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal cumulative distribution function Ψ.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density Ψ′.
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `E[(v + Z)_+]` for `Z ~ N(0, 1)`, i.e. `vΨ(v) + Ψ′(v)`.
pub fn gaussian_hinge(v: f64) -> f64 {
    v * std_normal_cdf(v) + std_normal_pdf(v)
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln σ(m)`.
pub fn log_sigmoid(m: f64) -> f64 {
    -softplus(-m)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Largest admissible margin: `logit(1 - EPS_CLIP)`.
pub fn margin_clip() -> f64 {
    ((1.0 - EPS_CLIP) / EPS_CLIP).ln()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into a probability vector.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|l| (l - lse).exp()).collect()
}

/// Gauss–Hermite nodes and weights for `∫ f(x) e^{-x²} dx` via Golub–Welsch.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let off = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = off;
        jacobi[(i - 1, i)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm2(a) * norm2(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_kernel_anchors() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_pdf(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-16);
        // Ψ(1) reference from a 50-digit evaluation.
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
        let mut prev = 0.0;
        for i in -400..=400 {
            let v = std_normal_cdf(i as f64 * 0.05);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn hinge_identity() {
        for v in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert!((gaussian_hinge(v) - gaussian_hinge(-v) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn logistic_helpers_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
        assert!((log_sigmoid(-50.0) + 50.0).abs() < 1e-12);
        assert!((softplus(1e-3) - (1.0f64 + 1e-3f64.exp()).ln()).abs() < 1e-15);
        assert!((logit(sigmoid(3.25)) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        let sp = std::f64::consts::PI.sqrt();
        assert!((m0 - sp).abs() < 1e-12);
        assert!((m2 - sp / 2.0).abs() < 1e-12);
        assert!((m4 - 3.0 * sp / 4.0).abs() < 1e-12);
    }

    #[test]
    fn lse_handles_infinities() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let s = softmax(&[0.0, 2f64.ln()]);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
    }
}
