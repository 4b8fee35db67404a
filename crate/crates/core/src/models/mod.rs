//! Target densities: closed-form toy targets and Bayesian logistic regression.

mod logistic;
mod skew_normal;

pub use logistic::{synth_logreg_data, LogisticRegression, SynthOptions};
pub(crate) use logistic::dot;
pub use skew_normal::{skew_normal_log_grad, skew_normal_moments, SkewNormal};

use crate::TargetModel;

/// Isotropic standard normal target in `d` dimensions, as a single datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StdNormal {
    dim: usize,
}

impl StdNormal {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        StdNormal { dim }
    }
}

impl TargetModel for StdNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_data(&self) -> usize {
        1
    }

    fn per_datum_grad_into(&self, _i: usize, theta: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(theta).for_each(|(o, t)| *o = -t);
    }

    fn full_grad_into(&self, theta: &[f64], out: &mut [f64]) {
        self.per_datum_grad_into(0, theta, out);
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        -0.5 * theta.iter().map(|t| t * t).sum::<f64>()
    }

    fn analytic_moments(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(0.0, 1.0); self.dim])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_normal_gradient_is_negated_theta() {
        let m = StdNormal::new(3);
        assert_eq!(m.full_grad(&[1.0, -2.0, 0.5]), vec![-1.0, 2.0, -0.5]);
        assert_eq!(m.per_datum_grad(0, &[1.0, -2.0, 0.5]), vec![-1.0, 2.0, -0.5]);
    }
}
