//! Target models and gradient estimation.
//!
//! A [`TargetModel`] exposes the log-density `g(θ) = Σᵢ gᵢ(θ)` through its
//! per-datum gradients, where each `gᵢ` carries a `1/N` share of the prior.
//! Samplers see gradients only through a [`GradientSource`]:
//!
//! - `Exact`: the full gradient;
//! - `Minibatch`: the unbiased estimator `(N/n) Σ_{i∈S} ∇gᵢ(θ)` over a random
//!   batch `S` of size `n`;
//! - `Injected`: the full gradient plus iid symmetric noise, for toy studies
//!   where the noise law is controlled directly.
//!
//! [`TauTracker`] keeps the exponential moving average of the per-coordinate
//! gradient noise scale used by the corrected samplers. In the default
//! [`TauMode::EstimatorScaled`] mode the batch standard deviation of the
//! per-datum gradients is multiplied by `N/√n`, which is the standard deviation
//! of the minibatch estimator itself. [`TauMode::PaperLiteral`] feeds the raw
//! per-datum standard deviation into the average instead; the two differ by
//! that factor and only the scaled form matches the noise scale the corrected
//! estimator assumes.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::NoiseLaw;
use crate::{Error, Result};

/// Differentiable log-density decomposed into per-datum components.
///
/// Implementations must be pure in `θ`.
pub trait TargetModel: Send + Sync {
    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    /// Number of data components `N`.
    fn n_data(&self) -> usize;

    /// Write `∇gᵢ(θ)` into `out` (length `d`).
    fn per_datum_grad_into(&self, i: usize, theta: &[f64], out: &mut [f64]);

    /// Log-density up to an additive constant.
    fn log_density(&self, theta: &[f64]) -> f64;

    /// Write `∇g(θ) = Σᵢ ∇gᵢ(θ)` into `out`. The default sums per-datum
    /// gradients in index order; overrides must keep that order so a full
    /// batch reproduces this value bit for bit.
    fn full_grad_into(&self, theta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; self.dim()];
        for i in 0..self.n_data() {
            self.per_datum_grad_into(i, theta, &mut buf);
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += b);
        }
    }

    /// Exact marginal `(mean, variance)` per coordinate, when known in closed form.
    fn analytic_moments(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    fn per_datum_grad(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.per_datum_grad_into(i, theta, &mut out);
        out
    }

    fn full_grad(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.full_grad_into(theta, &mut out);
        out
    }
}

impl<T: TargetModel + ?Sized> TargetModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_data(&self) -> usize {
        (**self).n_data()
    }
    fn per_datum_grad_into(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        (**self).per_datum_grad_into(i, theta, out)
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
    fn full_grad_into(&self, theta: &[f64], out: &mut [f64]) {
        (**self).full_grad_into(theta, out)
    }
    fn analytic_moments(&self) -> Option<Vec<(f64, f64)>> {
        (**self).analytic_moments()
    }
}

impl<T: TargetModel + ?Sized> TargetModel for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_data(&self) -> usize {
        (**self).n_data()
    }
    fn per_datum_grad_into(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        (**self).per_datum_grad_into(i, theta, out)
    }
    fn log_density(&self, theta: &[f64]) -> f64 {
        (**self).log_density(theta)
    }
    fn full_grad_into(&self, theta: &[f64], out: &mut [f64]) {
        (**self).full_grad_into(theta, out)
    }
    fn analytic_moments(&self) -> Option<Vec<(f64, f64)>> {
        (**self).analytic_moments()
    }
}

/// A gradient estimate together with the per-coordinate noise scale the
/// corrected samplers should assume (zero for exact and minibatch sources;
/// minibatch noise is tracked separately by [`TauTracker`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub value: Vec<f64>,
    pub noise_scale: Vec<f64>,
}

/// Additive gradient noise for controlled toy studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjector {
    pub law: NoiseLaw,
    pub scale: f64,
}

impl NoiseInjector {
    pub fn new(law: NoiseLaw, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::config(format!("noise scale must be finite and >= 0, got {scale}")));
        }
        Ok(NoiseInjector { law, scale })
    }
}

/// How a sampler obtains gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GradientSource {
    Exact,
    Minibatch {
        batch_size: usize,
        #[serde(default)]
        replacement: bool,
    },
    Injected(NoiseInjector),
}

/// Draw `n` indices from `0..n_data`.
///
/// Without replacement this is a partial Fisher–Yates shuffle of the identity
/// permutation; a full batch (`n == N`) returns `0..N` in order.
pub fn draw_batch<R: Rng + ?Sized>(
    n_data: usize,
    n: usize,
    replacement: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut sampler = BatchSampler::new(n_data, n, replacement)?;
    Ok(sampler.draw(rng).to_vec())
}

/// Reusable batch drawer that keeps its permutation buffer between draws.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    n: usize,
    replacement: bool,
    perm: Vec<usize>,
    out: Vec<usize>,
}

impl BatchSampler {
    pub fn new(n_data: usize, n: usize, replacement: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if n_data == 0 {
            return Err(Error::config("model has no data"));
        }
        if !replacement && n > n_data {
            return Err(Error::config(format!(
                "batch size {n} exceeds data size {n_data} without replacement"
            )));
        }
        Ok(BatchSampler {
            n,
            replacement,
            perm: (0..n_data).collect(),
            out: Vec::with_capacity(n),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[usize] {
        let n_data = self.perm.len();
        self.out.clear();
        if self.replacement {
            for _ in 0..self.n {
                self.out.push(rng.random_range(0..n_data));
            }
        } else if self.n == n_data {
            self.out.extend(0..n_data);
        } else {
            for k in 0..self.n {
                let j = rng.random_range(k..n_data);
                self.perm.swap(k, j);
            }
            self.out.extend_from_slice(&self.perm[..self.n]);
        }
        &self.out
    }
}

/// Minibatch gradient `(N/n) Σ_{i∈batch} ∇gᵢ(θ)`.
pub fn minibatch_gradient<M: TargetModel + ?Sized>(
    model: &M,
    theta: &[f64],
    batch: &[usize],
) -> Result<GradientEstimate> {
    let d = model.dim();
    let mut rows = Array2::zeros((batch.len(), d));
    let mut value = vec![0.0; d];
    minibatch_into(model, theta, batch, &mut rows, &mut value)?;
    Ok(GradientEstimate { value, noise_scale: vec![0.0; d] })
}

/// Fill `rows` with the batch's per-datum gradients and `value` with the
/// minibatch estimator.
pub(crate) fn minibatch_into<M: TargetModel + ?Sized>(
    model: &M,
    theta: &[f64],
    batch: &[usize],
    rows: &mut Array2<f64>,
    value: &mut [f64],
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::config("empty batch"));
    }
    let n_data = model.n_data();
    if let Some(&bad) = batch.iter().find(|&&i| i >= n_data) {
        return Err(Error::config(format!("batch index {bad} out of range 0..{n_data}")));
    }
    value.fill(0.0);
    for (k, &i) in batch.iter().enumerate() {
        let mut row = rows.row_mut(k);
        let row = row.as_slice_mut().expect("row-major buffer");
        model.per_datum_grad_into(i, theta, row);
        value.iter_mut().zip(row.iter()).for_each(|(v, r)| *v += r);
    }
    let scale = n_data as f64 / batch.len() as f64;
    value.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

/// Exact gradient plus iid noise from `injector` on every coordinate.
pub fn noisy_exact_gradient<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    theta: &[f64],
    injector: &NoiseInjector,
    rng: &mut R,
) -> GradientEstimate {
    let d = model.dim();
    let mut value = vec![0.0; d];
    model.full_grad_into(theta, &mut value);
    inject(injector, &mut value, rng);
    GradientEstimate { value, noise_scale: vec![injector.scale; d] }
}

pub(crate) fn inject<R: Rng + ?Sized>(injector: &NoiseInjector, value: &mut [f64], rng: &mut R) {
    if injector.scale == 0.0 {
        return;
    }
    for v in value.iter_mut() {
        *v += injector.law.sample(injector.scale, rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMode {
    /// EMA of the per-datum gradient sample standard deviation.
    PaperLiteral,
    /// EMA of `(N/√n)` times that standard deviation.
    #[default]
    EstimatorScaled,
}

/// Exponential moving average of per-coordinate gradient noise scales.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTracker {
    pub beta: f64,
    pub tau_hat: Vec<f64>,
    pub mode: TauMode,
}

impl TauTracker {
    pub fn new(beta: f64, tau_hat: Vec<f64>, mode: TauMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::config(format!("beta must lie in [0, 1], got {beta}")));
        }
        if tau_hat.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::config("initial tau_hat must be finite and >= 0"));
        }
        Ok(TauTracker { beta, tau_hat, mode })
    }

    /// Fold one batch (`n × d` per-datum gradients) into the average.
    pub fn update(&mut self, per_datum_grads: ArrayView2<'_, f64>, n_data: usize) -> Result<()> {
        let n = per_datum_grads.nrows();
        if n < 2 {
            return Err(Error::config("noise-scale tracking needs a batch of at least 2"));
        }
        if per_datum_grads.ncols() != self.tau_hat.len() {
            return Err(Error::config("batch width does not match tracker dimension"));
        }
        if self.beta == 0.0 {
            return Ok(());
        }
        let scale = match self.mode {
            TauMode::PaperLiteral => 1.0,
            TauMode::EstimatorScaled => n_data as f64 / (n as f64).sqrt(),
        };
        for (j, tau) in self.tau_hat.iter_mut().enumerate() {
            let col = per_datum_grads.column(j);
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            *tau = (1.0 - self.beta) * *tau + self.beta * scale * sd;
        }
        Ok(())
    }
}

/// Functional form of [`TauTracker::update`].
pub fn update_tau(
    tracker: &TauTracker,
    per_datum_grads: ArrayView2<'_, f64>,
    n_data: usize,
) -> Result<TauTracker> {
    let mut next = tracker.clone();
    next.update(per_datum_grads, n_data)?;
    Ok(next)
}
