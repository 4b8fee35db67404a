use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::estimators::sigmoid;
use crate::models::dot;
use crate::{Error, Result};

const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogLossMode {
    /// Loss of the predictions from `θ^(t)` alone.
    PerSample,
    /// Loss of the running average of per-draw predicted probabilities.
    #[default]
    Ergodic,
}

/// Held-out binary cross-entropy at every `t = 1..T` of a `T × d` chain.
pub fn log_loss(
    samples: ArrayView2<'_, f64>,
    x_test: ArrayView2<'_, f64>,
    y_test: ArrayView1<'_, f64>,
    mode: LogLossMode,
) -> Result<Vec<f64>> {
    let m = x_test.nrows();
    if m == 0 {
        return Err(Error::config("log-loss needs a non-empty test set"));
    }
    if y_test.len() != m || x_test.ncols() != samples.ncols() {
        return Err(Error::config("test set shape does not match the chain"));
    }
    let mut avg = vec![0.0; m];
    let mut curve = Vec::with_capacity(samples.nrows());
    for (t, theta) in samples.outer_iter().enumerate() {
        let theta = theta.as_slice().map(|s| s.to_vec()).unwrap_or_else(|| theta.to_vec());
        let mut loss = 0.0;
        for i in 0..m {
            let p = sigmoid(dot(x_test.row(i), &theta));
            let p = match mode {
                LogLossMode::PerSample => p,
                LogLossMode::Ergodic => {
                    avg[i] += (p - avg[i]) / (t + 1) as f64;
                    avg[i]
                }
            };
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            let y = y_test[i];
            loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        curve.push(loss / m as f64);
    }
    Ok(curve)
}

/// Incrementally updated running mean of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMean {
    count: usize,
    mean: Vec<f64>,
}

impl RunningMean {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let w = 1.0 / self.count as f64;
        for (m, &v) in self.mean.iter_mut().zip(x) {
            *m += (v - *m) * w;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

/// Mean of the first `t` rows of a `T × d` chain.
pub fn ergodic_mean(samples: ArrayView2<'_, f64>, t: usize) -> Result<Vec<f64>> {
    if t == 0 || t > samples.nrows() {
        return Err(Error::config(format!("t must lie in 1..={}, got {t}", samples.nrows())));
    }
    let mut rm = RunningMean::new(samples.ncols());
    for row in samples.outer_iter().take(t) {
        rm.push(&row.to_vec());
    }
    Ok(rm.mean)
}
