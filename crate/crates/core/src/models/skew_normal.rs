use std::f64::consts::{LN_2, PI};

use crate::estimators::{log_normal_cdf, normal_cdf, normal_pdf};
use crate::TargetModel;

/// Below this argument the Mills ratio `φ(x)/Φ(x)` uses its asymptotic series.
const MILLS_SWITCH: f64 = -30.0;

/// One-dimensional skew-normal target `π_α(θ) = 2φ(θ)Φ(αθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormal {
    pub alpha: f64,
}

impl SkewNormal {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha >= 0.0 && alpha.is_finite(), "alpha must be finite and >= 0");
        SkewNormal { alpha }
    }

    pub fn mean(&self) -> f64 {
        skew_normal_moments(self.alpha).0
    }

    pub fn sd(&self) -> f64 {
        skew_normal_moments(self.alpha).1
    }

    pub fn density(&self, theta: f64) -> f64 {
        2.0 * normal_pdf(theta) * normal_cdf(self.alpha * theta)
    }
}

/// `φ(x)/Φ(x)`.
fn mills_inverse(x: f64) -> f64 {
    if x < MILLS_SWITCH {
        let x2 = x * x;
        -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    } else {
        normal_pdf(x) / normal_cdf(x)
    }
}

/// `d/dθ log π_α(θ) = −θ + α φ(αθ)/Φ(αθ)`.
pub fn skew_normal_log_grad(theta: f64, alpha: f64) -> f64 {
    -theta + alpha * mills_inverse(alpha * theta)
}

/// `(mean, sd)` of the skew-normal with shape `alpha`.
pub fn skew_normal_moments(alpha: f64) -> (f64, f64) {
    let kappa = alpha / (1.0 + alpha * alpha).sqrt();
    let mean = (2.0 / PI).sqrt() * kappa;
    let sd = (1.0 - 2.0 * kappa * kappa / PI).sqrt();
    (mean, sd)
}

impl TargetModel for SkewNormal {
    fn dim(&self) -> usize {
        1
    }

    fn n_data(&self) -> usize {
        1
    }

    fn per_datum_grad_into(&self, _i: usize, theta: &[f64], out: &mut [f64]) {
        out[0] = skew_normal_log_grad(theta[0], self.alpha);
    }

    fn full_grad_into(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = skew_normal_log_grad(theta[0], self.alpha);
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let t = theta[0];
        LN_2 - 0.5 * t * t - 0.5 * (2.0 * PI).ln() + log_normal_cdf(self.alpha * t)
    }

    fn analytic_moments(&self) -> Option<Vec<(f64, f64)>> {
        let (m, sd) = skew_normal_moments(self.alpha);
        Some(vec![(m, sd * sd)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::PHI_ZERO;

    #[test]
    fn alpha_zero_is_standard_normal() {
        for t in [-3.0, -0.2, 0.0, 1.7] {
            assert!((skew_normal_log_grad(t, 0.0) + t).abs() < 1e-15);
        }
        assert_eq!(skew_normal_moments(0.0), (0.0, 1.0));
    }

    #[test]
    fn gradient_at_origin() {
        let g = skew_normal_log_grad(0.0, 5.0);
        assert!((g - 10.0 * PHI_ZERO).abs() < 1e-14);
        assert!((g - 3.98942).abs() < 1e-5);
    }

    #[test]
    fn half_normal_limit() {
        let (m, sd) = skew_normal_moments(1e6);
        assert!((m - (2.0 / PI).sqrt()).abs() < 1e-9);
        assert!((sd - (1.0 - 2.0 / PI).sqrt()).abs() < 1e-9);
        assert!((m - 0.79788).abs() < 1e-5 && (sd - 0.60281).abs() < 1e-5);
    }

    #[test]
    fn mills_switch_is_smooth() {
        let a = mills_inverse(MILLS_SWITCH + 1e-9);
        let b = mills_inverse(MILLS_SWITCH - 1e-9);
        assert!((a - b).abs() / a < 1e-7);
        assert!(mills_inverse(-1e4).is_finite());
    }
}
