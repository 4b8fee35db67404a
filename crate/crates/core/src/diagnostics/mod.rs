//! Chain diagnostics: effective sample size, standardized moment biases,
//! quantiles, held-out log-loss, ergodic averages, KS tests and histograms.

mod ess;
mod ks;
mod predictive;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use ess::{autocorrelation, ess};
pub use ks::{ks_two_sample, KsResult};
pub use predictive::{ergodic_mean, log_loss, LogLossMode, RunningMean};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor `T − 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Denominator of the variance bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarBiasScale {
    /// `|s² − V| / √V`. Not scale-free: it grows linearly with the target's scale.
    #[default]
    Sd,
    /// `|s² − V| / V`.
    Variance,
}

/// Standardized first- and second-order bias of one coordinate:
/// `(|x̄ − m| / √V, |s² − V| / √V)` (or `/ V` for the second with
/// [`VarBiasScale::Variance`]).
pub fn standardized_bias(
    samples: &[f64],
    true_mean: f64,
    true_var: f64,
    scale: VarBiasScale,
) -> Result<(f64, f64)> {
    if !(true_var > 0.0) {
        return Err(Error::domain(format!("true variance must be > 0, got {true_var}")));
    }
    if samples.len() < 2 {
        return Err(Error::Degenerate("need at least two samples".into()));
    }
    let sd = true_var.sqrt();
    let bias_mean = (mean(samples) - true_mean).abs() / sd;
    let dv = (sample_variance(samples) - true_var).abs();
    let bias_var = match scale {
        VarBiasScale::Sd => dv / sd,
        VarBiasScale::Variance => dv / true_var,
    };
    Ok((bias_mean, bias_var))
}

/// Empirical `q`-quantile of sorted data, linearly interpolated between order
/// statistics at position `(T − 1)q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0,1), got {q}")));
    }
    if samples.is_empty() {
        return Err(Error::Degenerate("no samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// Empirical `q`-quantile minus `true_quantile`.
pub fn quantile_bias(samples: &[f64], q: f64, true_quantile: f64) -> Result<f64> {
    Ok(quantile(samples, q)? - true_quantile)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordStats {
    pub mean: f64,
    pub var: f64,
    /// `None` when the series is constant or too short.
    pub ess: Option<f64>,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub bias_mean: Option<f64>,
    pub bias_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStats {
    pub coords: Vec<CoordStats>,
    pub diverged: bool,
}

impl ChainStats {
    pub fn median_ess(&self) -> f64 {
        median(&self.coords.iter().map(|c| c.ess.unwrap_or(f64::NAN)).collect::<Vec<_>>())
    }

    /// Mean over coordinates of `(bias_mean, bias_var)`, if a truth was given.
    pub fn mean_biases(&self) -> Option<(f64, f64)> {
        let n = self.coords.len() as f64;
        let bm: Option<f64> = self.coords.iter().map(|c| c.bias_mean).sum();
        let bv: Option<f64> = self.coords.iter().map(|c| c.bias_var).sum();
        Some((bm? / n, bv? / n))
    }
}

/// Per-coordinate summary of a `T × d` sample matrix. `truth` holds
/// `(mean, variance)` per coordinate.
pub fn summarize(
    samples: ArrayView2<'_, f64>,
    truth: Option<&[(f64, f64)]>,
    scale: VarBiasScale,
    diverged: bool,
) -> Result<ChainStats> {
    if let Some(t) = truth {
        if t.len() != samples.ncols() {
            return Err(Error::config("truth length does not match the sample dimension"));
        }
    }
    if samples.nrows() < 2 {
        return Err(Error::Degenerate("need at least two samples to summarize".into()));
    }
    let mut coords = Vec::with_capacity(samples.ncols());
    for j in 0..samples.ncols() {
        let col = samples.column(j).to_vec();
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        let (bias_mean, bias_var) = match truth {
            Some(t) => {
                let (bm, bv) = standardized_bias(&col, t[j].0, t[j].1, scale)?;
                (Some(bm), Some(bv))
            }
            None => (None, None),
        };
        coords.push(CoordStats {
            mean: mean(&col),
            var: sample_variance(&col),
            ess: ess(&col).ok(),
            q05: quantile_sorted(&sorted, 0.05),
            q50: quantile_sorted(&sorted, 0.5),
            q95: quantile_sorted(&sorted, 0.95),
            bias_mean,
            bias_var,
        });
    }
    Ok(ChainStats { coords, diverged })
}

/// Equal-width histogram on `[lo, hi)`: `(left edge, right edge, density)` per
/// bin. Samples outside the range are counted in the normalisation only.
pub fn histogram(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64, f64)>> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::config("histogram needs bins >= 1 and hi > lo"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        if x >= lo && x < hi {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let norm = samples.len() as f64 * width;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c as f64 / norm))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn bias_exact_match_is_zero() {
        let xs = [1.0, 2.0, 3.0];
        assert_eq!(standardized_bias(&xs, 2.0, 1.0, VarBiasScale::Sd).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn bias_one_sd_off() {
        let xs = [3.0, 5.0, 7.0];
        let (bm, _) = standardized_bias(&xs, 1.0, 4.0, VarBiasScale::Sd).unwrap();
        assert!((bm - 2.0).abs() < 1e-15);
        let (bm, _) = standardized_bias(&xs, 3.0, 4.0, VarBiasScale::Sd).unwrap();
        assert!((bm - 1.0).abs() < 1e-15);
        assert!(matches!(standardized_bias(&xs, 0.0, 0.0, VarBiasScale::Sd), Err(Error::Domain(_))));
    }

    #[test]
    fn bias_of_iid_truth_is_small() {
        let mut rng = stream_rng(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| 2.0 + 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let (bm, bv) = standardized_bias(&xs, 2.0, 9.0, VarBiasScale::Variance).unwrap();
        assert!(bm < 0.02 && bv < 0.02, "{bm} {bv}");
    }

    #[test]
    fn variance_scale_option() {
        let xs = [0.0, 4.0];
        let (_, sd) = standardized_bias(&xs, 2.0, 4.0, VarBiasScale::Sd).unwrap();
        let (_, var) = standardized_bias(&xs, 2.0, 4.0, VarBiasScale::Variance).unwrap();
        assert!((sd - 2.0).abs() < 1e-15 && (var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.5).unwrap(), 2.5);
        assert!((quantile(&xs, 0.95).unwrap() - 3.85).abs() < 1e-12);
        assert!(quantile(&xs, 1.0).is_err());
    }

    #[test]
    fn quantile_bias_translation() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64 / 999.0).collect();
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.25).collect();
        let a = quantile_bias(&xs, 0.3, 0.0).unwrap();
        let b = quantile_bias(&shifted, 0.3, 0.0).unwrap();
        assert!((b - a - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quantile_bias_on_quantile_grid() {
        use crate::estimators::inv_normal_cdf;
        let n = 100_000;
        let xs: Vec<f64> = (1..=n).map(|k| inv_normal_cdf(k as f64 / (n + 1) as f64).unwrap()).collect();
        assert!(quantile_bias(&xs, 0.95, 1.644_853_626_951_472).unwrap().abs() < 1e-3);
    }

    #[test]
    fn normal_q95_bias_is_small() {
        let mut rng = stream_rng(6, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(quantile_bias(&xs, 0.95, 1.6449).unwrap().abs() < 0.03);
    }

    #[test]
    fn histogram_integrates_to_one() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64 / 1000.0).collect();
        let h = histogram(&xs, 10, 0.0, 1.0).unwrap();
        let total: f64 = h.iter().map(|(l, r, d)| (r - l) * d).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn summarize_relabel_invariance() {
        let mut rng = stream_rng(7, 0);
        let a = ndarray::Array2::from_shape_fn((500, 2), |(_, j)| {
            j as f64 + Distribution::<f64>::sample(&StandardNormal, &mut rng)
        });
        let swapped = a.select(ndarray::Axis(1), &[1, 0]);
        let truth = [(0.0, 1.0), (1.0, 1.0)];
        let truth_sw = [(1.0, 1.0), (0.0, 1.0)];
        let s1 = summarize(a.view(), Some(&truth), VarBiasScale::Sd, false).unwrap();
        let s2 = summarize(swapped.view(), Some(&truth_sw), VarBiasScale::Sd, false).unwrap();
        assert_eq!(s1.coords[0], s2.coords[1]);
        assert_eq!(s1.mean_biases(), s2.mean_biases());
    }
}
