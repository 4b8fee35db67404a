use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result};

/// Normalised autocorrelation `ρ_0..ρ_{T−1}` of a series, computed by FFT with
/// the biased (divisor `T`) autocovariance.
pub fn autocorrelation(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Degenerate("autocorrelation needs at least two values".into()));
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = xs
        .iter()
        .map(|&x| Complex::new(x - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) || c0 <= 1e-300 * len as f64 {
        return Err(Error::Degenerate("series is constant".into()));
    }
    Ok(buf[..n].iter().map(|c| c.re / c0).collect())
}

/// Effective sample size with Geyer's initial monotone sequence estimator.
/// Clamped to `(0, T]`; needs `T ≥ 10` and a non-constant series.
pub fn ess(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 10 {
        return Err(Error::Degenerate(format!("ESS needs at least 10 samples, got {n}")));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    let rho = autocorrelation(xs)?;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while k + 1 < n {
        let gamma = rho[k] + rho[k + 1];
        if gamma <= 0.0 {
            break;
        }
        let gamma = gamma.min(prev);
        sum += gamma;
        prev = gamma;
        k += 2;
    }
    let tau_int = -1.0 + 2.0 * sum;
    let ess = if tau_int > 0.0 { n as f64 / tau_int } else { n as f64 };
    Ok(ess.min(n as f64))
}
