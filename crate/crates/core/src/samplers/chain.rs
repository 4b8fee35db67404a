use std::time::Instant;

use ndarray::{s, Array2};

use super::{ChainOutput, Kernel, SamplerConfig, DIVERGENCE_THRESHOLD};
use crate::{Error, Result, TargetModel};

/// Run `config.burn_in + config.iters` steps from `theta0` and record the last
/// `config.iters` states.
///
/// Bit-reproducible given `(config, theta0)`. A state with a non-finite
/// coordinate or one beyond [`DIVERGENCE_THRESHOLD`] aborts with
/// [`Error::Diverged`], carrying the rows recorded so far.
pub fn run_chain<M: TargetModel + ?Sized>(
    model: &M,
    config: &SamplerConfig,
    theta0: &[f64],
) -> Result<ChainOutput> {
    let start = Instant::now();
    let d = model.dim();
    let mut kernel = Kernel::new(model, config.clone())?;
    let mut state = kernel.init_state(theta0)?;
    let mut samples = Array2::zeros((config.iters, d));
    let mut tau_trace = Array2::zeros((config.iters, d));
    let total = config.burn_in + config.iters;
    let mut prev = state.theta.clone();

    for t in 0..total {
        prev.copy_from_slice(&state.theta);
        let outcome = kernel.step(&mut state);
        let diverged = match outcome {
            Ok(()) => state
                .theta
                .iter()
                .any(|x| !x.is_finite() || x.abs() > DIVERGENCE_THRESHOLD),
            Err(Error::Domain(_)) => true,
            Err(e) => return Err(e),
        };
        if diverged {
            let recorded = t.saturating_sub(config.burn_in);
            let partial = ChainOutput {
                samples: samples.slice(s![..recorded, ..]).to_owned(),
                tau_trace: tau_trace.slice(s![..recorded, ..]).to_owned(),
                seed: config.seed,
                config: config.clone(),
                wall_time: start.elapsed(),
            };
            return Err(Error::Diverged { iter: t + 1, last_state: prev, partial: Box::new(partial) });
        }
        if t >= config.burn_in {
            let row = t - config.burn_in;
            samples.row_mut(row).iter_mut().zip(&state.theta).for_each(|(o, v)| *o = *v);
            tau_trace.row_mut(row).iter_mut().zip(&state.tau_hat).for_each(|(o, v)| *o = *v);
        }
    }

    Ok(ChainOutput {
        samples,
        tau_trace,
        seed: config.seed,
        config: config.clone(),
        wall_time: start.elapsed(),
    })
}
