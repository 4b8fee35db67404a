//! Flipping-probability estimators for the Barker proposal under noisy
//! gradients.
//!
//! The Barker proposal keeps the sign of a proposed increment `z` with
//! probability `p(δ, z) = 1/(1 + exp(-zδ))` where `δ` is the partial derivative
//! of the log-target. When `δ` is replaced by an unbiased but noisy estimate
//! `δ̂ ~ δ + η`, the expectation of `p(δ̂, z)` is pulled towards one half. The
//! functions here quantify that shrinkage and provide the two remedies:
//!
//! - [`corrected_flip_prob`] inflates `δ̂` by `1.702/√(1.702² − τ²z²)` while
//!   `|z| < 1.702/τ`, falling back to the sign indicator beyond that band;
//! - [`extreme_flip_prob`] always uses the sign indicator, which has the
//!   smallest bias among symmetric estimators once the noise scale exceeds
//!   [`breaking_point`].
//!
//! All three estimators satisfy `e(δ, z) + e(-δ, z) = 1` exactly in floating
//! point. Indicator branches map the tie `δz = 0` to `0.5` so this holds
//! everywhere.

mod monte_carlo;
mod normal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use monte_carlo::{mc_expected_flip, McEstimate, NoiseLaw};
pub use normal::{inv_normal_cdf, log_normal_cdf, normal_cdf, normal_pdf, PHI_ZERO};

/// Scale constant of the logistic-to-normal CDF approximation
/// `F(x) ≈ Φ(x/1.702)`.
pub const LOGISTIC_NORMAL_SCALE: f64 = 1.702;

/// Branch guard for [`corrected_flip_prob`]: when `1.702² − τ²z²` falls below
/// this fraction of `1.702²`, the correction factor is treated as infinite.
const CORRECTION_GAP_EPS: f64 = 1e-12;

/// Which estimator of the flipping probability a Barker step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Vanilla,
    Corrected,
    Extreme,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Vanilla, Estimator::Corrected, Estimator::Extreme];

    /// Evaluate the estimator at gradient `grad`, increment `incr`; `noise_scale`
    /// is only read by [`Estimator::Corrected`].
    pub fn eval(self, grad: f64, incr: f64, noise_scale: f64) -> Result<f64> {
        match self {
            Estimator::Vanilla => flip_prob(grad, incr),
            Estimator::Corrected => corrected_flip_prob(grad, incr, noise_scale),
            Estimator::Extreme => extreme_flip_prob(grad, incr),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Vanilla => "vanilla",
            Estimator::Corrected => "corrected",
            Estimator::Extreme => "extreme",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Estimator::Vanilla),
            "corrected" => Ok(Estimator::Corrected),
            "extreme" => Ok(Estimator::Extreme),
            other => Err(Error::config(format!("unknown estimator `{other}`"))),
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {x}")))
    }
}

fn check_noise_scale(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("noise scale must be >= 0, got {tau}")))
    }
}

/// Logistic function. The negative half is written as `1 - σ(|x|)` so that
/// `σ(x) + σ(-x) == 1` holds exactly.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        1.0 - 1.0 / (1.0 + x.exp())
    }
}

#[inline]
fn sign_indicator(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Barker flipping probability `p(δ, z) = 1/(1 + exp(-zδ))`.
pub fn flip_prob(grad: f64, incr: f64) -> Result<f64> {
    check_finite("grad", grad)?;
    check_finite("incr", incr)?;
    Ok(sigmoid(grad * incr))
}

/// Multiplicative attenuation `1.702/√(1.702² + z²τ²)` of the effective
/// gradient under gaussian gradient noise of scale `τ`.
pub fn shrink_factor(incr: f64, noise_scale: f64) -> Result<f64> {
    check_noise_scale(noise_scale)?;
    check_finite("incr", incr)?;
    Ok(LOGISTIC_NORMAL_SCALE / LOGISTIC_NORMAL_SCALE.hypot(incr * noise_scale))
}

/// Noise-corrected flipping probability.
///
/// Inside the band `|z| < 1.702/τ` the noisy gradient is inflated by
/// `1.702/√(1.702² − τ²z²)`; outside it the sign indicator is returned.
/// `noise_scale = 0` reduces to [`flip_prob`].
pub fn corrected_flip_prob(grad_hat: f64, incr: f64, noise_scale: f64) -> Result<f64> {
    check_finite("grad", grad_hat)?;
    check_finite("incr", incr)?;
    check_noise_scale(noise_scale)?;
    let s = noise_scale * incr.abs();
    if s == 0.0 {
        return Ok(sigmoid(grad_hat * incr));
    }
    const C: f64 = LOGISTIC_NORMAL_SCALE;
    if s < C {
        let gap = (C - s) * (C + s);
        if gap > CORRECTION_GAP_EPS * C * C {
            return Ok(sigmoid(grad_hat * incr * (C / gap.sqrt())));
        }
    }
    Ok(sign_indicator(grad_hat * incr))
}

/// Sign-indicator estimator `1(δz > 0)`, with `0.5` at `δz = 0`.
pub fn extreme_flip_prob(grad_hat: f64, incr: f64) -> Result<f64> {
    check_finite("grad", grad_hat)?;
    check_finite("incr", incr)?;
    Ok(sign_indicator(grad_hat * incr))
}

/// Breaking point `τ̄(δ, z) = |δ / Φ⁻¹(p(δ, z))|`: the gaussian noise scale
/// at which the extreme estimator's expectation equals `p(δ, z)`.
///
/// Returns `+∞` when `δz = 0`. For large `|δz|` the tail probability
/// `1 - p` is handled in log space so the result stays finite and continuous.
pub fn breaking_point(grad: f64, incr: f64) -> Result<f64> {
    check_finite("grad", grad)?;
    check_finite("incr", incr)?;
    let x = (grad * incr).abs();
    if x == 0.0 {
        return Ok(f64::INFINITY);
    }
    let quantile = if x < 700.0 {
        let e = (-x).exp();
        let tail = e / (1.0 + e);
        -inv_normal_cdf(tail)?
    } else {
        normal::tail_quantile_from_log(-x - (-x).exp().ln_1p())
    };
    if quantile == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((grad / quantile).abs())
}

/// Noise tolerance `τ* = 4φ(0)/|z|`, the infimum of [`breaking_point`] over
/// gradients.
pub fn noise_tolerance(incr: f64) -> Result<f64> {
    check_finite("incr", incr)?;
    if incr == 0.0 {
        return Err(Error::domain("noise tolerance is unbounded at incr = 0"));
    }
    Ok(4.0 * PHI_ZERO / incr.abs())
}
