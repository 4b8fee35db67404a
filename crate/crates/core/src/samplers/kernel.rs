use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::{barker_increment, langevin_noise_sd, ChainState, SamplerConfig, TauInit};
use crate::estimators::Estimator;
use crate::gradients::{inject, minibatch_into, BatchSampler, GradientSource, TauTracker};
use crate::rng::ChainRng;
use crate::{Error, Result, TargetModel};

/// One-step transition for a configured sampler variant.
///
/// Each step draws the gradient estimate first (batch, then τ̂ update for
/// corrected variants), then updates every coordinate from its own random
/// stream.
pub struct Kernel<'m, M: TargetModel + ?Sized> {
    model: &'m M,
    config: SamplerConfig,
    source: GradientSource,
    batch: Option<BatchSampler>,
    rows: Array2<f64>,
    grad: Vec<f64>,
    tracker: Option<TauTracker>,
}

impl<'m, M: TargetModel + ?Sized> Kernel<'m, M> {
    pub fn new(model: &'m M, config: SamplerConfig) -> Result<Self> {
        config.validate(model.n_data())?;
        let d = model.dim();
        let source = config.effective_source();
        let (batch, rows) = match source {
            GradientSource::Minibatch { batch_size, replacement } => (
                Some(BatchSampler::new(model.n_data(), batch_size, replacement)?),
                Array2::zeros((batch_size, d)),
            ),
            _ => (None, Array2::zeros((0, d))),
        };
        let tracker = match source {
            GradientSource::Minibatch { .. } if config.variant.tracks_tau() => {
                Some(TauTracker::new(config.beta, vec![0.0; d], config.tau_mode)?)
            }
            _ => None,
        };
        Ok(Kernel { model, config, source, batch, rows, grad: vec![0.0; d], tracker })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Fresh state at `theta0`, with the noise-scale estimate initialised.
    pub fn init_state(&mut self, theta0: &[f64]) -> Result<ChainState> {
        let d = self.model.dim();
        if theta0.len() != d {
            return Err(Error::config(format!("theta0 has length {} but d = {d}", theta0.len())));
        }
        if theta0.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("theta0 must be finite"));
        }
        let mut state = ChainState {
            theta: theta0.to_vec(),
            tau_hat: vec![0.0; d],
            iter: 0,
            rng: ChainRng::new(self.config.seed, d),
        };
        if !self.config.variant.tracks_tau() {
            return Ok(state);
        }
        match self.source {
            GradientSource::Injected(inj) => state.tau_hat.fill(inj.scale),
            GradientSource::Minibatch { .. } => {
                let tracker = self.tracker.as_mut().expect("tracker for minibatch corrected variant");
                match self.config.tau_init {
                    TauInit::Fixed(v) => tracker.tau_hat.fill(v),
                    TauInit::WarmUp => {
                        let batch = self.batch.as_mut().expect("batch sampler");
                        let idx = batch.draw(&mut state.rng.gradient);
                        minibatch_into(self.model, &state.theta, idx, &mut self.rows, &mut self.grad)?;
                        let mut warm = TauTracker::new(1.0, vec![0.0; d], tracker.mode)?;
                        warm.update(self.rows.view(), self.model.n_data())?;
                        tracker.tau_hat = warm.tau_hat;
                    }
                }
                state.tau_hat.copy_from_slice(&tracker.tau_hat);
            }
            GradientSource::Exact => {}
        }
        Ok(state)
    }

    fn estimate_gradient(&mut self, state: &mut ChainState) -> Result<()> {
        match self.source {
            GradientSource::Exact => self.model.full_grad_into(&state.theta, &mut self.grad),
            GradientSource::Minibatch { .. } => {
                let batch = self.batch.as_mut().expect("batch sampler");
                let idx = batch.draw(&mut state.rng.gradient);
                minibatch_into(self.model, &state.theta, idx, &mut self.rows, &mut self.grad)?;
                if let Some(tracker) = self.tracker.as_mut() {
                    tracker.update(self.rows.view(), self.model.n_data())?;
                    state.tau_hat.copy_from_slice(&tracker.tau_hat);
                }
            }
            GradientSource::Injected(inj) => {
                self.model.full_grad_into(&state.theta, &mut self.grad);
                inject(&inj, &mut self.grad, &mut state.rng.gradient);
            }
        }
        if let Some(j) = self.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::domain(format!("non-finite gradient in coordinate {j}")));
        }
        Ok(())
    }

    /// Barker-family step (exact, vanilla, corrected or extreme).
    pub fn sgbd_step(&mut self, state: &mut ChainState) -> Result<()> {
        let estimator = self
            .config
            .variant
            .estimator()
            .ok_or_else(|| Error::config("sgbd_step called for a Langevin variant"))?;
        self.estimate_gradient(state)?;
        let step = self.config.step;
        for (j, rng) in state.rng.coords.iter_mut().enumerate() {
            let tau = if estimator == Estimator::Corrected { state.tau_hat[j] } else { 0.0 };
            state.theta[j] += barker_increment(self.grad[j], tau, step, estimator, rng)?;
        }
        state.iter += 1;
        Ok(())
    }

    /// Langevin-family step (exact ULA, vanilla, corrected or extreme SGLD).
    pub fn sgld_step(&mut self, state: &mut ChainState) -> Result<()> {
        let variant = self.config.variant;
        if variant.is_barker() {
            return Err(Error::config("sgld_step called for a Barker variant"));
        }
        self.estimate_gradient(state)?;
        let step = self.config.step;
        let half_sq = 0.5 * step * step;
        for (j, rng) in state.rng.coords.iter_mut().enumerate() {
            state.theta[j] += half_sq * self.grad[j];
            if variant == crate::samplers::Variant::ESgld {
                continue;
            }
            let eps: f64 = StandardNormal.sample(rng);
            let sd = langevin_noise_sd(variant, step, state.tau_hat[j]);
            if sd > 0.0 {
                state.theta[j] += sd * eps;
            }
        }
        state.iter += 1;
        Ok(())
    }

    pub fn step(&mut self, state: &mut ChainState) -> Result<()> {
        if self.config.variant.is_barker() {
            self.sgbd_step(state)
        } else {
            self.sgld_step(state)
        }
    }
}
