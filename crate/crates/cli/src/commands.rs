use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sgbd::diagnostics::{summarize, ChainStats};
use sgbd::estimators::NoiseLaw;
use sgbd::experiments::{
    curve_boundary, estimator_curve, heavytail_study, logreg_study, skew_study, sweep, CurveRow,
};
use sgbd::models::{synth_logreg_data, LogisticRegression, SkewNormal, StdNormal, SynthOptions};
use sgbd::rng::{derive_seed, label, stream_rng};
use sgbd::samplers::{run_chain, ChainOutput, SamplerConfig, Variant};
use sgbd::TargetModel;

use crate::config::{ExperimentConfig, Kind, ModelSpec};
use crate::csvio::{fmt_f64, fmt_opt, read_logistic_data, write_matrix, CsvOut};
use crate::error::{CliError, CliResult};

/// Files written by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Iteration at which a `run` chain diverged.
    pub diverged_at: Option<usize>,
}

pub enum Model {
    StdNormal(StdNormal),
    SkewNormal(SkewNormal),
    Logistic(LogisticRegression),
}

impl Model {
    pub fn target(&self) -> &dyn TargetModel {
        match self {
            Model::StdNormal(m) => m,
            Model::SkewNormal(m) => m,
            Model::Logistic(m) => m,
        }
    }
}

/// Builds a model. Synthetic data is drawn from the `data` stream of `seed`.
pub fn build_model(spec: &ModelSpec, seed: u64, base_dir: &Path) -> CliResult<Model> {
    Ok(match spec {
        ModelSpec::StdNormal { dim } => Model::StdNormal(StdNormal::new(*dim)),
        ModelSpec::SkewNormal { alpha } => Model::SkewNormal(SkewNormal::new(*alpha)),
        ModelSpec::Logistic { csv: Some(path), .. } => {
            let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            let (x, y) = read_logistic_data(&path)?;
            Model::Logistic(LogisticRegression::new(x, y)?)
        }
        ModelSpec::Logistic { synthetic: Some(s), .. } => {
            let mut rng = stream_rng(derive_seed(seed, &[label("data")]), 0);
            let theta_true = match &s.theta_true {
                Some(t) => t.clone(),
                None => (0..s.dim).map(|_| NoiseLaw::Gaussian.sample(1.0, &mut rng)).collect(),
            };
            let opts = SynthOptions { column_scale: s.column_scale };
            let (x, y) = synth_logreg_data(s.n_data, s.dim, &theta_true, &opts, &mut rng)?;
            Model::Logistic(LogisticRegression::new(x, y)?)
        }
        ModelSpec::Logistic { .. } => {
            return Err(CliError::Config("logistic model needs `csv` or `synthetic`".into()))
        }
    })
}

/// Per-coordinate `(mean, variance)` ground truth: closed form when the model
/// has one, else the configured reference chain, else none.
fn ground_truth(config: &ExperimentConfig, model: &dyn TargetModel, theta0: &[f64]) -> CliResult<Option<Vec<(f64, f64)>>> {
    if let Some(m) = model.analytic_moments() {
        return Ok(Some(m));
    }
    let Some(r) = &config.diagnostics.reference else {
        return Ok(None);
    };
    let seed = derive_seed(config.seed, &[label("reference")]);
    let rc = SamplerConfig::new(Variant::ExactBarker, r.step, r.iters).with_seed(seed);
    let out = run_chain(model, &rc, theta0)?;
    let stats = summarize(out.samples.view(), None, config.diagnostics.var_scale, false)?;
    Ok(Some(stats.coords.iter().map(|c| (c.mean, c.var)).collect()))
}

fn prepare_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let probe = out.join(".sgbd-write-probe");
    std::fs::write(&probe, b"").map_err(|e| CliError::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))
}

/// Runs the experiment described by `config`, writing CSVs and
/// `manifest.json` into `out`. `source` is the config text, echoed into the
/// manifest; `base_dir` resolves relative data paths.
///
/// A diverged `run` still writes its partial outputs and then returns
/// [`CliError::Diverged`].
pub fn execute(config: &ExperimentConfig, source: &str, base_dir: &Path, out: &Path) -> CliResult<Outcome> {
    config.validate()?;
    prepare_out_dir(out)?;
    let start = Instant::now();
    let mut extra = serde_json::Map::new();
    let mut outcome = match config.kind {
        Kind::Run => cmd_run(config, base_dir, out, &mut extra)?,
        Kind::Sweep => cmd_sweep(config, base_dir, out)?,
        Kind::Curve => cmd_curve(config, out)?,
        Kind::SkewStudy => cmd_skew(config, out)?,
        Kind::HeavytailStudy => cmd_heavytail(config, out)?,
        Kind::LogregStudy => cmd_logreg(config, out, &mut extra)?,
    };
    let manifest_path = out.join("manifest.json");
    let names: Vec<String> = outcome
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let mut manifest = json!({
        "tool": "sgbd",
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("SGBD_GIT_DESCRIBE"),
        "kind": config.kind.name(),
        "seed": config.seed,
        "config": config,
        "config_source": source,
        "outputs": names,
        "diverged_at": outcome.diverged_at,
        "wall_time_secs": start.elapsed().as_secs_f64(),
    });
    manifest.as_object_mut().expect("object").extend(extra);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;
    outcome.files.push(manifest_path);
    match outcome.diverged_at {
        Some(iter) => Err(CliError::Diverged { iter }),
        None => Ok(outcome),
    }
}

fn run_model(config: &ExperimentConfig, base_dir: &Path) -> CliResult<(Model, Vec<f64>)> {
    let spec = config.model.as_ref().ok_or_else(|| CliError::Config("missing [model]".into()))?;
    let model = build_model(spec, config.seed, base_dir)?;
    let d = model.target().dim();
    let theta0 = config.theta0.clone().unwrap_or_else(|| vec![0.0; d]);
    if theta0.len() != d {
        return Err(CliError::Config(format!("theta0 has length {} but the model has d = {d}", theta0.len())));
    }
    Ok((model, theta0))
}

fn cmd_run(
    config: &ExperimentConfig,
    base_dir: &Path,
    out: &Path,
    extra: &mut serde_json::Map<String, serde_json::Value>,
) -> CliResult<Outcome> {
    let (model, theta0) = run_model(config, base_dir)?;
    let target = model.target();
    let sampler = config.sampler.as_ref().expect("validated").to_config(config.seed);
    sampler.validate(target.n_data())?;
    let truth = ground_truth(config, target, &theta0)?;

    let (output, diverged_at): (ChainOutput, Option<usize>) = match run_chain(target, &sampler, &theta0) {
        Ok(o) => (o, None),
        Err(sgbd::Error::Diverged { iter, partial, last_state }) => {
            extra.insert("last_finite_state".into(), json!(last_state));
            (*partial, Some(iter))
        }
        Err(e) => return Err(e.into()),
    };
    extra.insert("sampler".into(), json!(sampler));
    extra.insert("chain_wall_time_secs".into(), json!(output.wall_time.as_secs_f64()));

    let mut files = Vec::new();
    let first = sampler.burn_in + 1;
    let p = out.join("samples.csv");
    write_matrix(&p, "theta", &output.samples, first)?;
    files.push(p);
    if sampler.variant.tracks_tau() {
        let p = out.join("tau_trace.csv");
        write_matrix(&p, "tau", &output.tau_trace, first)?;
        files.push(p);
    }
    if output.samples.nrows() >= 2 {
        let stats = summarize(
            output.samples.view(),
            truth.as_deref(),
            config.diagnostics.var_scale,
            diverged_at.is_some(),
        )?;
        let p = out.join("diagnostics.csv");
        write_diagnostics(&p, &stats)?;
        files.push(p);
    }
    Ok(Outcome { files, diverged_at })
}

pub fn write_diagnostics(path: &Path, stats: &ChainStats) -> CliResult<()> {
    let mut out = CsvOut::create(
        path,
        &["coordinate", "mean", "var", "ess", "q05", "q50", "q95", "bias_mean", "bias_var"],
        &[("diverged".into(), stats.diverged.to_string())],
    )?;
    for (j, c) in stats.coords.iter().enumerate() {
        out.row([
            (j + 1).to_string(),
            fmt_f64(c.mean),
            fmt_f64(c.var),
            fmt_opt(c.ess),
            fmt_f64(c.q05),
            fmt_f64(c.q50),
            fmt_f64(c.q95),
            fmt_opt(c.bias_mean),
            fmt_opt(c.bias_var),
        ])?;
    }
    out.finish()
}

fn cmd_sweep(config: &ExperimentConfig, base_dir: &Path, out: &Path) -> CliResult<Outcome> {
    let (model, theta0) = run_model(config, base_dir)?;
    let target = model.target();
    let spec = config.sweep.as_ref().expect("validated");
    let sampler = config.sampler.as_ref().expect("validated");
    let base = sampler.to_config(config.seed);
    let variants = spec.variants.clone().unwrap_or_else(|| vec![sampler.variant]);
    for &v in &variants {
        SamplerConfig { variant: v, ..base.clone() }.validate(target.n_data())?;
    }
    let truth = ground_truth(config, target, &theta0)?;
    let rows = sweep(
        target,
        &base,
        &variants,
        &spec.steps,
        &theta0,
        truth.as_deref(),
        config.diagnostics.var_scale,
        config.seed,
    )?;
    let p = out.join("sweep.csv");
    let mut w = CsvOut::create(
        &p,
        &["variant", "step", "seed", "median_ess", "bias_mean", "bias_var", "diverged"],
        &[],
    )?;
    for r in rows {
        w.row([
            r.variant.name().to_string(),
            fmt_f64(r.step),
            r.seed.to_string(),
            fmt_f64(r.median_ess),
            fmt_f64(r.bias_mean),
            fmt_f64(r.bias_var),
            r.diverged.to_string(),
        ])?;
    }
    w.finish()?;
    Ok(Outcome { files: vec![p], diverged_at: None })
}

fn cmd_curve(config: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let spec = config.curve.as_ref().expect("validated");
    let grid = spec.grid()?;
    let band = curve_boundary(spec.tau).unwrap_or(f64::INFINITY);
    let mut files = Vec::new();
    for &law in &spec.laws {
        let rows: Vec<CurveRow> = estimator_curve(spec.grad, spec.tau, &grid, law, spec.draws, config.seed)?;
        let name = if spec.laws.len() == 1 {
            "estimator_curve.csv".to_string()
        } else {
            format!("estimator_curve_{}.csv", law.name())
        };
        let p = out.join(name);
        let meta = vec![
            ("grad".to_string(), fmt_f64(spec.grad)),
            ("tau".to_string(), fmt_f64(spec.tau)),
            ("law".to_string(), law.name().to_string()),
            ("draws".to_string(), spec.draws.to_string()),
            ("boundary_lo".to_string(), fmt_f64(-band)),
            ("boundary_hi".to_string(), fmt_f64(band)),
        ];
        let mut w = CsvOut::create(&p, &["z", "p_true", "e_vanilla", "e_corrected", "e_extreme", "mc_se"], &meta)?;
        for r in rows {
            w.row([r.z, r.p_true, r.e_vanilla, r.e_corrected, r.e_extreme, r.mc_se].map(fmt_f64))?;
        }
        w.finish()?;
        files.push(p);
    }
    Ok(Outcome { files, diverged_at: None })
}

fn cmd_skew(config: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let rows = skew_study(config.skew_study.as_ref().expect("validated"), config.seed)?;
    let p = out.join("skew_study.csv");
    let mut w = CsvOut::create(
        &p,
        &["alpha", "variant", "step_multiplier", "step", "tau", "mean", "true_mean", "rel_mean_bias", "diverged"],
        &[],
    )?;
    for r in rows {
        w.row([
            fmt_f64(r.alpha),
            r.variant.name().to_string(),
            fmt_f64(r.step_multiplier),
            fmt_f64(r.step),
            fmt_f64(r.tau),
            fmt_f64(r.mean),
            fmt_f64(r.true_mean),
            fmt_f64(r.rel_mean_bias),
            r.diverged.to_string(),
        ])?;
    }
    w.finish()?;
    Ok(Outcome { files: vec![p], diverged_at: None })
}

fn cmd_heavytail(config: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let study = config.heavytail_study.as_ref().expect("validated");
    let rows = heavytail_study(study, config.seed)?;
    let p = out.join("heavytail_study.csv");
    let mut w = CsvOut::create(
        &p,
        &["variant", "step", "noise_scale", "quantile", "quantile_bias", "max_abs", "diverged", "diverged_at"],
        &[("law".into(), study.law.name().into())],
    )?;
    for r in rows {
        w.row([
            r.variant.name().to_string(),
            fmt_f64(r.step),
            fmt_f64(r.noise_scale),
            fmt_f64(study.quantile),
            fmt_f64(r.quantile_bias),
            fmt_f64(r.max_abs),
            r.diverged.to_string(),
            r.diverged_at.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    w.finish()?;
    Ok(Outcome { files: vec![p], diverged_at: None })
}

fn cmd_logreg(
    config: &ExperimentConfig,
    out: &Path,
    extra: &mut serde_json::Map<String, serde_json::Value>,
) -> CliResult<Outcome> {
    let study = config.logreg_study.as_ref().expect("validated");
    let result = logreg_study(study, config.seed)?;
    extra.insert("theta_true".into(), json!(result.theta_true));

    let curve_path = out.join("logloss.csv");
    let mut header = vec!["t".to_string()];
    header.extend(result.curves.iter().map(|(l, _)| l.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvOut::create(&curve_path, &header, &[])?;
    for t in 0..study.iters {
        let mut row = vec![(t + 1).to_string()];
        row.extend(result.curves.iter().map(|(_, c)| fmt_f64(c[t])));
        w.row(&row)?;
    }
    w.finish()?;

    let summary_path = out.join("logreg_summary.csv");
    let mut w = CsvOut::create(&summary_path, &["label", "final_log_loss", "median_ess", "diverged"], &[])?;
    for s in &result.summary {
        w.row([s.label.clone(), fmt_f64(s.final_log_loss), fmt_f64(s.median_ess), s.diverged.to_string()])?;
    }
    w.finish()?;
    Ok(Outcome { files: vec![curve_path, summary_path], diverged_at: None })
}
