use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::estimators::sigmoid;
use crate::{Error, Result, TargetModel};

/// Bayesian logistic regression `yᵢ ~ Bern(σ(θᵀxᵢ))` with prior `θ ~ N(0, I)`.
///
/// Each datum carries `1/N` of the prior, so per-datum gradients are
/// `−θ/N + xᵢ(yᵢ − σ(θᵀxᵢ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl LogisticRegression {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::config("logistic regression needs N >= 1 rows and d >= 1 columns"));
        }
        if x.nrows() != y.len() {
            return Err(Error::config(format!(
                "design has {} rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::config("responses must be 0 or 1"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("design matrix has non-finite entries"));
        }
        Ok(LogisticRegression { x: x.as_standard_layout().into_owned(), y })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn logit(&self, i: usize, theta: &[f64]) -> f64 {
        dot(self.x.row(i), theta)
    }
}

pub(crate) fn dot(row: ArrayView1<'_, f64>, theta: &[f64]) -> f64 {
    row.iter().zip(theta).map(|(a, b)| a * b).sum()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl TargetModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn n_data(&self) -> usize {
        self.x.nrows()
    }

    fn per_datum_grad_into(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        let row = self.x.row(i);
        let resid = self.y[i] - sigmoid(dot(row, theta));
        let inv_n = 1.0 / self.n_data() as f64;
        for ((o, t), xv) in out.iter_mut().zip(theta).zip(row.iter()) {
            *o = -t * inv_n + xv * resid;
        }
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let prior = -0.5 * theta.iter().map(|t| t * t).sum::<f64>();
        let lik: f64 = (0..self.n_data())
            .map(|i| {
                let eta = self.logit(i, theta);
                self.y[i] * eta - softplus(eta)
            })
            .sum();
        prior + lik
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthOptions {
    /// Multiply column `.0` of the design by `.1`, inducing a posterior whose
    /// scale along that coordinate is much smaller than along the others.
    pub column_scale: Option<(usize, f64)>,
}

/// Synthetic logistic data: rows of `X` iid standard normal (optionally with one
/// rescaled column), `yᵢ ~ Bern(σ(θ_trueᵀxᵢ))`.
pub fn synth_logreg_data<R: Rng + ?Sized>(
    n_data: usize,
    dim: usize,
    theta_true: &[f64],
    options: &SynthOptions,
    rng: &mut R,
) -> Result<(Array2<f64>, Array1<f64>)> {
    if n_data == 0 || dim == 0 {
        return Err(Error::config("synthetic data needs N >= 1 and d >= 1"));
    }
    if theta_true.len() != dim {
        return Err(Error::config(format!(
            "theta_true has length {} but d = {dim}",
            theta_true.len()
        )));
    }
    if let Some((col, factor)) = options.column_scale {
        if col >= dim || !factor.is_finite() {
            return Err(Error::config("column_scale refers to a missing column or is not finite"));
        }
    }
    let mut x = Array2::zeros((n_data, dim));
    let mut y = Array1::zeros(n_data);
    for i in 0..n_data {
        for j in 0..dim {
            let mut v: f64 = StandardNormal.sample(rng);
            if let Some((col, factor)) = options.column_scale {
                if col == j {
                    v *= factor;
                }
            }
            x[[i, j]] = v;
        }
        let p = sigmoid(dot(x.row(i), theta_true));
        y[i] = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
    }
    Ok((x, y))
}
