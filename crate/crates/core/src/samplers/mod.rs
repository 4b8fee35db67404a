//! Transition kernels and the chain loop.
//!
//! Eight variants share one driver:
//!
//! | variant        | increment                         | gradient      |
//! |----------------|-----------------------------------|---------------|
//! | `exact-barker` | Barker, `p(δ, w)`                 | exact         |
//! | `v-sgbd`       | Barker, `p(δ̂, w)`                 | configured    |
//! | `c-sgbd`       | Barker, corrected with `τ̂`        | configured    |
//! | `e-sgbd`       | Barker, sign indicator            | configured    |
//! | `exact-ula`    | `σ²/2·δ + N(0, σ²)`               | exact         |
//! | `v-sgld`       | `σ²/2·δ̂ + N(0, σ²)`               | configured    |
//! | `c-sgld`       | `σ²/2·δ̂ + N(0, max(0, σ² − τ̂²σ⁴/4))` | configured |
//! | `e-sgld`       | `σ²/2·δ̂` (no injected noise)      | configured    |
//!
//! Barker increments are `b·w` with `w ~ N(σ, (0.1σ)²)` and `b = +1` with the
//! estimator's probability. Using the one-sided `w` is equivalent in law to the
//! symmetric bimodal mixture `½N(−σ, (0.1σ)²) + ½N(σ, (0.1σ)²)` because the
//! sign is re-drawn by the flip.

mod chain;
mod kernel;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::estimators::Estimator;
use crate::gradients::{GradientSource, TauMode};
use crate::rng::ChainRng;
use crate::{Error, Result};

pub use chain::run_chain;
pub use kernel::Kernel;

/// Any coordinate beyond this magnitude aborts the chain as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "exact-barker")]
    ExactBarker,
    #[serde(rename = "v-sgbd")]
    VSgbd,
    #[serde(rename = "c-sgbd")]
    CSgbd,
    #[serde(rename = "e-sgbd")]
    ESgbd,
    #[serde(rename = "exact-ula")]
    ExactUla,
    #[serde(rename = "v-sgld")]
    VSgld,
    #[serde(rename = "c-sgld")]
    CSgld,
    #[serde(rename = "e-sgld")]
    ESgld,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::ExactBarker,
        Variant::VSgbd,
        Variant::CSgbd,
        Variant::ESgbd,
        Variant::ExactUla,
        Variant::VSgld,
        Variant::CSgld,
        Variant::ESgld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ExactBarker => "exact-barker",
            Variant::VSgbd => "v-sgbd",
            Variant::CSgbd => "c-sgbd",
            Variant::ESgbd => "e-sgbd",
            Variant::ExactUla => "exact-ula",
            Variant::VSgld => "v-sgld",
            Variant::CSgld => "c-sgld",
            Variant::ESgld => "e-sgld",
        }
    }

    pub fn is_barker(self) -> bool {
        matches!(self, Variant::ExactBarker | Variant::VSgbd | Variant::CSgbd | Variant::ESgbd)
    }

    /// Exact variants always evaluate the full gradient.
    pub fn is_exact(self) -> bool {
        matches!(self, Variant::ExactBarker | Variant::ExactUla)
    }

    /// Variants that consume a gradient noise-scale estimate.
    pub fn tracks_tau(self) -> bool {
        matches!(self, Variant::CSgbd | Variant::CSgld)
    }

    /// Flip estimator of a Barker variant.
    pub fn estimator(self) -> Option<Estimator> {
        match self {
            Variant::ExactBarker | Variant::VSgbd => Some(Estimator::Vanilla),
            Variant::CSgbd => Some(Estimator::Corrected),
            Variant::ESgbd => Some(Estimator::Extreme),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown sampler variant `{s}`")))
    }
}

/// Initial value of the tracked noise scale for minibatch corrected variants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauInit {
    /// One batch at `θ⁽⁰⁾` folded in with weight one.
    #[default]
    WarmUp,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub variant: Variant,
    /// Step size `σ`.
    pub step: f64,
    pub source: GradientSource,
    /// EMA weight of the noise-scale tracker.
    pub beta: f64,
    pub tau_mode: TauMode,
    pub tau_init: TauInit,
    /// Iterations run and discarded before recording.
    pub burn_in: usize,
    /// Recorded iterations.
    pub iters: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub const DEFAULT_BETA: f64 = 0.1;

    /// Exact-gradient config with default tracker settings and burn-in of
    /// `iters / 2`.
    pub fn new(variant: Variant, step: f64, iters: usize) -> Self {
        SamplerConfig {
            variant,
            step,
            source: GradientSource::Exact,
            beta: Self::DEFAULT_BETA,
            tau_mode: TauMode::default(),
            tau_init: TauInit::default(),
            burn_in: iters / 2,
            iters,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_source(mut self, source: GradientSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_tau(mut self, mode: TauMode, init: TauInit) -> Self {
        self.tau_mode = mode;
        self.tau_init = init;
        self
    }

    /// The gradient source actually used: exact variants ignore `source`.
    pub fn effective_source(&self) -> GradientSource {
        if self.variant.is_exact() {
            GradientSource::Exact
        } else {
            self.source
        }
    }

    pub fn validate(&self, n_data: usize) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(format!("step must be finite and > 0, got {}", self.step)));
        }
        if self.iters == 0 {
            return Err(Error::config("iters must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if let TauInit::Fixed(v) = self.tau_init {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config("fixed tau_init must be finite and >= 0"));
            }
        }
        match self.effective_source() {
            GradientSource::Exact => {}
            GradientSource::Minibatch { batch_size, replacement } => {
                if batch_size == 0 {
                    return Err(Error::config("batch_size must be at least 1"));
                }
                if !replacement && batch_size > n_data {
                    return Err(Error::config(format!(
                        "batch_size {batch_size} exceeds data size {n_data}"
                    )));
                }
                if self.variant.tracks_tau() && batch_size < 2 {
                    return Err(Error::config("corrected variants need batch_size >= 2"));
                }
            }
            GradientSource::Injected(inj) => {
                if !(inj.scale >= 0.0 && inj.scale.is_finite()) {
                    return Err(Error::config("injected noise scale must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Mutable state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Noise scale fed to corrected variants (zeros otherwise).
    pub tau_hat: Vec<f64>,
    pub iter: usize,
    pub rng: ChainRng,
}

/// Recorded post-burn-in draws.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// `iters × d` samples.
    pub samples: Array2<f64>,
    /// `iters × d` noise-scale estimates in use at each recorded step.
    pub tau_trace: Array2<f64>,
    pub seed: u64,
    pub config: SamplerConfig,
    pub wall_time: Duration,
}

/// One Barker increment for a single coordinate: `w ~ N(σ, (0.1σ)²)`, kept
/// with probability `estimator(grad, w; τ)` and negated otherwise.
pub fn barker_increment<R: Rng + ?Sized>(
    grad: f64,
    tau: f64,
    step: f64,
    estimator: Estimator,
    rng: &mut R,
) -> Result<f64> {
    let eps: f64 = StandardNormal.sample(rng);
    let w = step + 0.1 * step * eps;
    let keep = estimator.eval(grad, w, tau)?;
    let u: f64 = rng.random();
    Ok(if u < keep { w } else { -w })
}

/// Standard deviation of the artificial noise in a Langevin step.
pub fn langevin_noise_sd(variant: Variant, step: f64, tau: f64) -> f64 {
    match variant {
        Variant::CSgld if tau >= 2.0 / step => 0.0,
        Variant::CSgld => step * (1.0 - 0.25 * tau * tau * step * step).max(0.0).sqrt(),
        Variant::ESgld => 0.0,
        _ => step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("sghmc".parse::<Variant>(), Err(Error::Config(_))));
    }

    #[test]
    fn saturated_gradient_keeps_sign() {
        let mut rng = stream_rng(1, 1);
        for _ in 0..10_000 {
            assert!(barker_increment(1e12, 0.0, 0.3, Estimator::Vanilla, &mut rng).unwrap() > 0.0);
        }
    }

    #[test]
    fn zero_gradient_is_fair() {
        let mut rng = stream_rng(2, 1);
        let n = 100_000;
        let pos = (0..n)
            .filter(|_| barker_increment(0.0, 0.0, 0.3, Estimator::Vanilla, &mut rng).unwrap() > 0.0)
            .count();
        let se = (0.25 / n as f64).sqrt();
        assert!((pos as f64 / n as f64 - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn langevin_noise_variances() {
        let sd = langevin_noise_sd(Variant::CSgld, 0.1, 10.0);
        assert!((sd * sd - 0.0075).abs() < 1e-15);
        assert_eq!(langevin_noise_sd(Variant::CSgld, 0.5, 2.0 / 0.5), 0.0);
        assert_eq!(langevin_noise_sd(Variant::CSgld, 0.5, 5.0), 0.0);
        assert_eq!(langevin_noise_sd(Variant::CSgld, 0.5, 0.0), 0.5);
        assert_eq!(langevin_noise_sd(Variant::VSgld, 0.5, 9.0), 0.5);
        assert_eq!(langevin_noise_sd(Variant::ESgld, 0.5, 0.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let ok = SamplerConfig::new(Variant::VSgbd, 0.1, 10);
        assert!(ok.validate(5).is_ok());
        assert!(SamplerConfig::new(Variant::VSgbd, 0.0, 10).validate(5).is_err());
        assert!(SamplerConfig::new(Variant::VSgbd, 0.1, 0).validate(5).is_err());
        let big = ok.clone().with_source(GradientSource::Minibatch { batch_size: 6, replacement: false });
        assert!(matches!(big.validate(5), Err(Error::Config(_))));
        let single = SamplerConfig::new(Variant::CSgbd, 0.1, 10)
            .with_source(GradientSource::Minibatch { batch_size: 1, replacement: false });
        assert!(single.validate(5).is_err());
        assert!(ok.with_beta(0.0).validate(5).is_err());
    }
}
