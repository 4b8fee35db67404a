//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

/// `1/√(2π)`, the standard normal density at zero.
pub const PHI_ZERO: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(x: f64) -> f64 {
    PHI_ZERO * (-0.5 * x * x).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, accurate deep into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        normal_cdf(x).ln()
    } else {
        // Φ(x) ≈ φ(x)/|x| · (1 - 1/x² + 3/x⁴)
        let x2 = x * x;
        -0.5 * x2 - (2.0 * PI).sqrt().ln() - (-x).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Standard normal quantile `Φ⁻¹(p)`.
///
/// Wichura's algorithm AS 241 (PPND16), a pair of rational minimax
/// approximations with relative accuracy of about 1e-16 over `(0, 1)`.
pub fn inv_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("inv_normal_cdf needs p in (0,1), got {p}")));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * central(r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let x = tail_quantile((-tail.ln()).sqrt());
    Ok(if q < 0.0 { -x } else { x })
}

/// `|Φ⁻¹(t)|` for a lower-tail probability `t = exp(log_t) ≤ 0.075`, given
/// only its logarithm. Lets callers reach quantiles whose tail mass
/// underflows `f64`.
pub(crate) fn tail_quantile_from_log(log_t: f64) -> f64 {
    tail_quantile((-log_t).sqrt())
}

fn central(r: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    poly(&A, r) / poly(&B, r)
}

fn tail_quantile(r: f64) -> f64 {
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    }
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the erfc-based CDF, independent of the rational approximation.
    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_known_values() {
        assert_eq!(inv_normal_cdf(0.5).unwrap(), 0.0);
        assert!((inv_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((inv_normal_cdf(0.025).unwrap() + 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn quantile_matches_bisection() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let q = inv_normal_cdf(p).unwrap();
            assert!((q - bisect_quantile(p)).abs() < 1e-9, "p={p}");
        }
        for e in 3..300 {
            let p = 10f64.powi(-e);
            let q = inv_normal_cdf(p).unwrap();
            let rel = (q - bisect_quantile(p)).abs() / q.abs();
            assert!(rel < 1e-9, "p=1e-{e}: {q}");
        }
    }

    #[test]
    fn quantile_round_trip() {
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let back = normal_cdf(inv_normal_cdf(p).unwrap());
            assert!((back - p).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(inv_normal_cdf(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn tail_from_log_agrees() {
        for p in [1e-3, 1e-10, 1e-100] {
            let a = tail_quantile_from_log(f64::ln(p));
            let b = -inv_normal_cdf(p).unwrap();
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn log_cdf_branches_meet() {
        let below = log_normal_cdf(-30.0 - 1e-9);
        let exact = normal_cdf(-30.0).ln();
        assert!((below - exact).abs() / exact.abs() < 1e-9);
    }
}
