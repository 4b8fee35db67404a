use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Estimator;
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Symmetric law of additive gradient noise. `scale` is the standard
/// deviation for gaussian noise and the scale parameter (`b`, `γ`) for the
/// Laplace and Cauchy laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLaw {
    #[default]
    Gaussian,
    Laplace,
    Cauchy,
}

impl NoiseLaw {
    pub const ALL: [NoiseLaw; 3] = [NoiseLaw::Gaussian, NoiseLaw::Laplace, NoiseLaw::Cauchy];

    /// One draw of noise with the given scale.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, scale: f64, rng: &mut R) -> f64 {
        let unit: f64 = match self {
            NoiseLaw::Gaussian => StandardNormal.sample(rng),
            NoiseLaw::Laplace => {
                let u: f64 = Open01.sample(rng);
                let v = u - 0.5;
                let m = -(1.0 - 2.0 * v.abs()).ln();
                if v < 0.0 {
                    -m
                } else {
                    m
                }
            }
            NoiseLaw::Cauchy => {
                let u: f64 = Open01.sample(rng);
                (std::f64::consts::PI * (u - 0.5)).tan()
            }
        };
        scale * unit
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseLaw::Gaussian => "gaussian",
            NoiseLaw::Laplace => "laplace",
            NoiseLaw::Cauchy => "cauchy",
        }
    }
}

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseLaw::Gaussian),
            "laplace" => Ok(NoiseLaw::Laplace),
            "cauchy" => Ok(NoiseLaw::Cauchy),
            other => Err(Error::config(format!("unsupported noise law `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

const CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }
}

/// Monte Carlo estimate of `E[e(grad + η, incr)]` for `η` iid from `law` with
/// scale `noise_scale`, where `e` is the chosen estimator (the corrected
/// estimator is given the true `noise_scale`).
///
/// Draws are split into fixed chunks of 65 536, each on its own ChaCha stream
/// of `seed`, and merged in chunk order; the result depends only on the
/// arguments, not on the thread count.
pub fn mc_expected_flip(
    grad: f64,
    incr: f64,
    noise_scale: f64,
    law: NoiseLaw,
    estimator: Estimator,
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    if draws == 0 {
        return Err(Error::config("mc_expected_flip needs at least one draw"));
    }
    if !(noise_scale >= 0.0) {
        return Err(Error::domain(format!("noise scale must be >= 0, got {noise_scale}")));
    }
    // validates grad/incr once; per-draw evaluation below cannot fail for finite noise
    estimator.eval(grad, incr, noise_scale)?;

    let chunks = draws.div_ceil(CHUNK);
    let partials: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let len = CHUNK.min(draws - k * CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                let g = grad + law.sample(noise_scale, &mut rng);
                // Cauchy draws can overflow to ±inf; the sign still decides the flip.
                let g = g.clamp(-f64::MAX, f64::MAX);
                m.push(estimator.eval(g, incr, noise_scale).unwrap_or(0.5));
            }
            m
        })
        .collect();
    let total = partials.into_iter().fold(Moments::default(), Moments::merge);
    let std_error = if total.n > 1.0 {
        (total.m2.max(0.0) / (total.n - 1.0) / total.n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate { mean: total.mean, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{flip_prob, normal_cdf};

    #[test]
    fn zero_noise_is_exact() {
        for e in Estimator::ALL {
            let m = mc_expected_flip(1.3, -0.7, 0.0, NoiseLaw::Gaussian, e, 100_000, 1).unwrap();
            assert_eq!(m.mean, e.eval(1.3, -0.7, 0.0).unwrap());
            assert_eq!(m.std_error, 0.0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = mc_expected_flip(2.0, 0.5, 3.0, NoiseLaw::Laplace, Estimator::Vanilla, 200_000, 5).unwrap();
        let b = mc_expected_flip(2.0, 0.5, 3.0, NoiseLaw::Laplace, Estimator::Vanilla, 200_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extreme_matches_closed_form() {
        let (g, z, tau) = (1.5, 0.8, 2.0);
        let m = mc_expected_flip(g, z, tau, NoiseLaw::Gaussian, Estimator::Extreme, 1_000_000, 11).unwrap();
        let exact = normal_cdf(g / tau);
        assert!((m.mean - exact).abs() < 4.0 * m.std_error, "{} vs {exact}", m.mean);
    }

    #[test]
    fn vanilla_is_shrunk() {
        let (g, z, tau) = (2.0, 1.0, 3.0);
        let m = mc_expected_flip(g, z, tau, NoiseLaw::Gaussian, Estimator::Vanilla, 500_000, 3).unwrap();
        let p = flip_prob(g, z).unwrap();
        assert!(m.mean > 0.5 && m.mean < p + 3.0 * m.std_error);
        assert!(m.mean < p);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            mc_expected_flip(1.0, 1.0, 1.0, NoiseLaw::Gaussian, Estimator::Vanilla, 0, 1),
            Err(Error::Config(_))
        ));
        assert!(mc_expected_flip(1.0, 1.0, -1.0, NoiseLaw::Gaussian, Estimator::Vanilla, 10, 1).is_err());
        assert!(matches!("student".parse::<NoiseLaw>(), Err(Error::Config(_))));
    }
}
