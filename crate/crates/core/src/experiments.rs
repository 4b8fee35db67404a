//! Experiment drivers: estimator curves, step-size sweeps and the toy and
//! logistic-regression studies. Each driver returns plain rows; writing files
//! is left to the caller.
//!
//! All randomness is derived from one root seed with [`derive_seed`], keyed by
//! the point's labels, so any row can be recomputed on its own.

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{log_loss, quantile, summarize, LogLossMode, VarBiasScale};
use crate::estimators::{
    flip_prob, inv_normal_cdf, mc_expected_flip, Estimator, NoiseLaw, LOGISTIC_NORMAL_SCALE,
};
use crate::gradients::{GradientSource, NoiseInjector};
use crate::models::{synth_logreg_data, LogisticRegression, SkewNormal, StdNormal, SynthOptions};
use crate::rng::{derive_seed, label, stream_rng};
use crate::samplers::{run_chain, ChainOutput, SamplerConfig, Variant};
use crate::{Error, Result, TargetModel};

/// Fewest Monte Carlo draws accepted by [`estimator_curve`].
pub const MIN_CURVE_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub z: f64,
    pub p_true: f64,
    pub e_vanilla: f64,
    pub e_corrected: f64,
    pub e_extreme: f64,
    /// Largest standard error of the three estimates.
    pub mc_se: f64,
}

/// Expected value of each estimator along a grid of increments `z`, under noise
/// of scale `tau` around the true gradient `grad`.
pub fn estimator_curve(
    grad: f64,
    tau: f64,
    z_grid: &[f64],
    law: NoiseLaw,
    draws: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if draws < MIN_CURVE_DRAWS {
        return Err(Error::config(format!("curve needs at least {MIN_CURVE_DRAWS} draws, got {draws}")));
    }
    z_grid
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            // common random numbers across the three estimators
            let point_seed = derive_seed(seed, &[label("curve"), label(law.name()), k as u64]);
            let mc = |e| mc_expected_flip(grad, z, tau, law, e, draws, point_seed);
            let (v, c, x) = (mc(Estimator::Vanilla)?, mc(Estimator::Corrected)?, mc(Estimator::Extreme)?);
            Ok(CurveRow {
                z,
                p_true: flip_prob(grad, z)?,
                e_vanilla: v.mean,
                e_corrected: c.mean,
                e_extreme: x.mean,
                mc_se: v.std_error.max(c.std_error).max(x.std_error),
            })
        })
        .collect()
}

/// Increment magnitude `1.702/τ` beyond which the corrected estimator
/// degenerates to the sign indicator. `None` at `τ = 0`.
pub fn curve_boundary(tau: f64) -> Option<f64> {
    (tau > 0.0).then(|| LOGISTIC_NORMAL_SCALE / tau)
}

/// Trapezoid integrals of `|e_vanilla − p_true|` and `|e_corrected − p_true|`
/// over the rows with `|z| < band`.
pub fn integrated_curve_error(rows: &[CurveRow], band: f64) -> (f64, f64) {
    let inside: Vec<&CurveRow> = rows.iter().filter(|r| r.z.abs() < band).collect();
    let mut vanilla = 0.0;
    let mut corrected = 0.0;
    for pair in inside.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = b.z - a.z;
        vanilla += 0.5 * h * ((a.e_vanilla - a.p_true).abs() + (b.e_vanilla - b.p_true).abs());
        corrected += 0.5 * h * ((a.e_corrected - a.p_true).abs() + (b.e_corrected - b.p_true).abs());
    }
    (vanilla, corrected)
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect(),
    }
}

/// Outcome of one chain, diverged or not.
#[derive(Debug, Clone)]
pub struct PointRun {
    pub output: ChainOutput,
    /// 1-based iteration at which the chain diverged.
    pub diverged_at: Option<usize>,
}

impl PointRun {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// [`run_chain`], with divergence folded into the result.
pub fn run_point<M: TargetModel + ?Sized>(model: &M, config: &SamplerConfig, theta0: &[f64]) -> Result<PointRun> {
    match run_chain(model, config, theta0) {
        Ok(output) => Ok(PointRun { output, diverged_at: None }),
        Err(Error::Diverged { iter, partial, .. }) => Ok(PointRun { output: *partial, diverged_at: Some(iter) }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: Variant,
    pub step: f64,
    /// Seed of this point's chain; rerunning with it reproduces the row.
    pub seed: u64,
    pub median_ess: f64,
    pub bias_mean: f64,
    pub bias_var: f64,
    pub diverged: bool,
}

/// Seed of the sweep point `(variant, step)`.
pub fn sweep_seed(root: u64, variant: Variant, step: f64) -> u64 {
    derive_seed(root, &[label("sweep"), label(variant.name()), step.to_bits()])
}

/// Runs every `(variant, step)` pair in parallel. Rows are grouped by variant in
/// the given order and sorted by step within each group. Bias columns are NaN
/// without a truth, and all statistics are NaN when fewer than two rows were
/// recorded before divergence.
#[allow(clippy::too_many_arguments)]
pub fn sweep<M: TargetModel + ?Sized>(
    model: &M,
    base: &SamplerConfig,
    variants: &[Variant],
    steps: &[f64],
    theta0: &[f64],
    truth: Option<&[(f64, f64)]>,
    scale: VarBiasScale,
    root_seed: u64,
) -> Result<Vec<SweepRow>> {
    if steps.is_empty() || variants.is_empty() {
        return Err(Error::config("sweep grid must be non-empty"));
    }
    if let Some(bad) = steps.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::config(format!("step must be finite and > 0, got {bad}")));
    }
    let mut grid = steps.to_vec();
    grid.sort_by(f64::total_cmp);
    let points: Vec<(Variant, f64)> =
        variants.iter().flat_map(|&v| grid.iter().map(move |&s| (v, s))).collect();
    points
        .par_iter()
        .map(|&(variant, step)| {
            let seed = sweep_seed(root_seed, variant, step);
            let config = SamplerConfig { variant, step, seed, ..base.clone() };
            let run = run_point(model, &config, theta0)?;
            let (median_ess, bias_mean, bias_var) = if run.output.samples.nrows() >= 2 {
                let stats = summarize(run.output.samples.view(), truth, scale, run.diverged())?;
                let (bm, bv) = stats.mean_biases().unwrap_or((f64::NAN, f64::NAN));
                (stats.median_ess(), bm, bv)
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            Ok(SweepRow { variant, step, seed, median_ess, bias_mean, bias_var, diverged: run.diverged() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewStudy {
    pub alphas: Vec<f64>,
    pub variants: Vec<Variant>,
    /// Step sizes as multiples of the target's standard deviation.
    pub step_multipliers: Vec<f64>,
    /// Injected noise scale as a multiple of the target's standard deviation.
    pub noise_multiplier: f64,
    #[serde(default)]
    pub law: NoiseLaw,
    pub iters: usize,
    pub burn_in: usize,
    /// Independent chains per point; their sample means are averaged.
    #[serde(default = "one")]
    pub replicates: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewRow {
    pub alpha: f64,
    pub variant: Variant,
    pub step_multiplier: f64,
    pub step: f64,
    pub tau: f64,
    pub mean: f64,
    pub true_mean: f64,
    /// `(mean − true_mean) / true_mean`; divided by the sd instead when the
    /// true mean is zero.
    pub rel_mean_bias: f64,
    pub diverged: bool,
}

/// Skewed-target study: every `(α, variant, step)` with gaussian-family noise
/// injected into the exact gradient of the skew-normal `π_α`.
pub fn skew_study(study: &SkewStudy, root_seed: u64) -> Result<Vec<SkewRow>> {
    if study.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::config("alphas must be finite and >= 0"));
    }
    if study.replicates == 0 || study.iters == 0 {
        return Err(Error::config("replicates and iters must be >= 1"));
    }
    if !(study.noise_multiplier >= 0.0) {
        return Err(Error::config("noise_multiplier must be >= 0"));
    }
    let mut points = Vec::new();
    for &alpha in &study.alphas {
        for &variant in &study.variants {
            for &mult in &study.step_multipliers {
                points.push((alpha, variant, mult));
            }
        }
    }
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..study.replicates).map(move |r| (p, r))).collect();
    let runs: Vec<(f64, bool)> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let (alpha, variant, mult) = points[p];
            let model = SkewNormal::new(alpha);
            let sd = model.sd();
            let source = GradientSource::Injected(NoiseInjector::new(study.law, study.noise_multiplier * sd)?);
            let seed = derive_seed(
                root_seed,
                &[label("skew"), alpha.to_bits(), label(variant.name()), mult.to_bits(), r as u64],
            );
            let config = SamplerConfig::new(variant, mult * sd, study.iters)
                .with_burn_in(study.burn_in)
                .with_source(source)
                .with_seed(seed);
            let run = run_point(&model, &config, &[0.0])?;
            let col = run.output.samples.column(0);
            let mean = if col.is_empty() { f64::NAN } else { col.sum() / col.len() as f64 };
            Ok((mean, run.diverged()))
        })
        .collect::<Result<_>>()?;

    Ok(points
        .iter()
        .enumerate()
        .map(|(p, &(alpha, variant, mult))| {
            let reps = &runs[p * study.replicates..(p + 1) * study.replicates];
            let mean = reps.iter().map(|r| r.0).sum::<f64>() / reps.len() as f64;
            let (true_mean, sd) = (SkewNormal::new(alpha).mean(), SkewNormal::new(alpha).sd());
            let denom = if true_mean != 0.0 { true_mean.abs() } else { sd };
            SkewRow {
                alpha,
                variant,
                step_multiplier: mult,
                step: mult * sd,
                tau: study.noise_multiplier * sd,
                mean,
                true_mean,
                rel_mean_bias: (mean - true_mean) / denom,
                diverged: reps.iter().any(|r| r.1),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavyTailStudy {
    pub law: NoiseLaw,
    pub noise_scales: Vec<f64>,
    pub steps: Vec<f64>,
    pub variants: Vec<Variant>,
    pub iters: usize,
    pub burn_in: usize,
    #[serde(default = "q95")]
    pub quantile: f64,
}

fn q95() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeavyTailRow {
    pub variant: Variant,
    pub step: f64,
    pub noise_scale: f64,
    /// Empirical quantile minus the standard normal one.
    pub quantile_bias: f64,
    pub max_abs: f64,
    pub diverged: bool,
    pub diverged_at: Option<usize>,
}

/// Heavy-tailed gradient noise on a 1-d standard normal target.
pub fn heavytail_study(study: &HeavyTailStudy, root_seed: u64) -> Result<Vec<HeavyTailRow>> {
    let true_q = inv_normal_cdf(study.quantile)?;
    if study.iters == 0 {
        return Err(Error::config("iters must be >= 1"));
    }
    let mut points = Vec::new();
    for &variant in &study.variants {
        for &step in &study.steps {
            for &scale in &study.noise_scales {
                points.push((variant, step, scale));
            }
        }
    }
    let model = StdNormal::new(1);
    points
        .par_iter()
        .map(|&(variant, step, scale)| {
            let seed = derive_seed(
                root_seed,
                &[label("heavytail"), label(variant.name()), step.to_bits(), scale.to_bits()],
            );
            let config = SamplerConfig::new(variant, step, study.iters)
                .with_burn_in(study.burn_in)
                .with_source(GradientSource::Injected(NoiseInjector::new(study.law, scale)?))
                .with_seed(seed);
            let run = run_point(&model, &config, &[0.0])?;
            let col = run.output.samples.column(0).to_vec();
            let quantile_bias = if col.is_empty() { f64::NAN } else { quantile(&col, study.quantile)? - true_q };
            let max_abs = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(HeavyTailRow {
                variant,
                step,
                noise_scale: scale,
                quantile_bias,
                max_abs,
                diverged: run.diverged(),
                diverged_at: run.diverged_at,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegStudy {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub batch_size: usize,
    pub step: f64,
    /// Stochastic-gradient variants compared against the exact-gradient Barker
    /// reference.
    pub variants: Vec<Variant>,
    pub iters: usize,
    pub burn_in: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Rescale one feature column, as `[column, factor]`.
    #[serde(default)]
    pub column_scale: Option<(usize, f64)>,
}

fn default_beta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRegSummary {
    pub label: String,
    pub final_log_loss: f64,
    pub median_ess: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct LogRegResult {
    /// `(label, ergodic log-loss at every recorded t)`; the reference is first.
    /// Curves of diverged chains are NaN-padded to full length.
    pub curves: Vec<(String, Vec<f64>)>,
    pub summary: Vec<LogRegSummary>,
    pub theta_true: Vec<f64>,
}

pub const REFERENCE_LABEL: &str = "reference";

/// Logistic regression on synthetic data: train on the first `n_train` rows,
/// score held-out ergodic log-loss on the remaining `n_test`.
pub fn logreg_study(study: &LogRegStudy, root_seed: u64) -> Result<LogRegResult> {
    if study.n_train < 1 || study.n_test < 1 {
        return Err(Error::config("n_train and n_test must be >= 1"));
    }
    let mut rng = stream_rng(derive_seed(root_seed, &[label("logreg-data")]), 0);
    let theta_true: Vec<f64> = (0..study.dim)
        .map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
        .collect();
    let options = SynthOptions { column_scale: study.column_scale };
    let (x, y) = synth_logreg_data(study.n_train + study.n_test, study.dim, &theta_true, &options, &mut rng)?;
    let train = LogisticRegression::new(
        x.slice(s![..study.n_train, ..]).to_owned(),
        y.slice(s![..study.n_train]).to_owned(),
    )?;
    let x_test: Array2<f64> = x.slice(s![study.n_train.., ..]).to_owned();
    let y_test: Array1<f64> = y.slice(s![study.n_train..]).to_owned();

    let mut arms: Vec<(String, SamplerConfig)> = vec![(
        REFERENCE_LABEL.to_string(),
        SamplerConfig::new(Variant::ExactBarker, study.step, study.iters),
    )];
    for &v in &study.variants {
        let source = GradientSource::Minibatch { batch_size: study.batch_size, replacement: false };
        arms.push((v.name().to_string(), SamplerConfig::new(v, study.step, study.iters).with_source(source)));
    }
    let theta0 = vec![0.0; study.dim];
    let results: Vec<(Vec<f64>, LogRegSummary)> = arms
        .into_par_iter()
        .map(|(name, config)| {
            let seed = derive_seed(root_seed, &[label("logreg"), label(&name)]);
            let config = config.with_burn_in(study.burn_in).with_beta(study.beta).with_seed(seed);
            let run = run_point(&train, &config, &theta0)?;
            let samples = run.output.samples;
            let mut curve = if samples.nrows() > 0 {
                log_loss(samples.view(), x_test.view(), y_test.view(), LogLossMode::Ergodic)?
            } else {
                Vec::new()
            };
            let median_ess = if samples.nrows() >= 2 {
                summarize(samples.view(), None, VarBiasScale::Sd, false)?.median_ess()
            } else {
                f64::NAN
            };
            curve.resize(study.iters, f64::NAN);
            let summary = LogRegSummary {
                label: name,
                final_log_loss: *curve.last().unwrap_or(&f64::NAN),
                median_ess,
                diverged: run.diverged_at.is_some(),
            };
            Ok((curve, summary))
        })
        .collect::<Result<_>>()?;

    let (curves, summary): (Vec<_>, Vec<_>) =
        results.into_iter().map(|(c, s)| ((s.label.clone(), c), s)).unzip();
    Ok(LogRegResult { curves, summary, theta_true })
}
