//! Experiment configuration files.
//!
//! A config is one TOML document. The top-level `kind` selects the
//! experiment; each kind reads its own sections and rejects unknown keys.
//!
//! ```toml
//! kind = "run"            # run | sweep | curve | skew-study | heavytail-study | logreg-study
//! seed = 42               # root seed; `--seed` overrides it
//!
//! [model]                 # run, sweep
//! type = "skew-normal"    # std-normal {dim} | skew-normal {alpha} | logistic {csv | synthetic}
//! alpha = 5.0
//!
//! [sampler]               # run, sweep
//! variant = "v-sgbd"      # exact-barker v-sgbd c-sgbd e-sgbd exact-ula v-sgld c-sgld e-sgld
//! step = 0.3
//! iters = 10000           # recorded iterations
//! burn_in = 5000          # discarded iterations, default iters / 2
//! beta = 0.1              # noise-scale EMA weight
//! tau_mode = "estimator-scaled"   # or "paper-literal"
//! tau_init = "warm-up"            # or { fixed = 2.5 }
//! source = { type = "injected", law = "gaussian", scale = 0.6 }
//! # source = { type = "minibatch", batch_size = 50, replacement = false }
//! # source = { type = "exact" }
//! ```
//!
//! See `configs/` in this crate for a complete example of every kind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgbd::estimators::NoiseLaw;
use sgbd::experiments::{HeavyTailStudy, LogRegStudy, SkewStudy};
use sgbd::gradients::{GradientSource, TauMode};
use sgbd::diagnostics::VarBiasScale;
use sgbd::samplers::{SamplerConfig, TauInit, Variant};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Run,
    Sweep,
    Curve,
    SkewStudy,
    HeavytailStudy,
    LogregStudy,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Run => "run",
            Kind::Sweep => "sweep",
            Kind::Curve => "curve",
            Kind::SkewStudy => "skew-study",
            Kind::HeavytailStudy => "heavytail-study",
            Kind::LogregStudy => "logreg-study",
        }
    }

    pub fn is_study(self) -> bool {
        matches!(self, Kind::SkewStudy | Kind::HeavytailStudy | Kind::LogregStudy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    pub model: Option<ModelSpec>,
    pub sampler: Option<SamplerSpec>,
    /// Starting point; zeros when omitted.
    pub theta0: Option<Vec<f64>>,
    pub sweep: Option<SweepSpec>,
    pub curve: Option<CurveSpec>,
    pub skew_study: Option<SkewStudy>,
    pub heavytail_study: Option<HeavyTailStudy>,
    pub logreg_study: Option<LogRegStudy>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    StdNormal {
        dim: usize,
    },
    SkewNormal {
        alpha: f64,
    },
    /// Either a CSV file with header `y,x1,..,xd` or synthetic data.
    Logistic {
        csv: Option<PathBuf>,
        synthetic: Option<SyntheticSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_data: usize,
    pub dim: usize,
    /// Coefficients generating the labels; iid standard normal when omitted.
    pub theta_true: Option<Vec<f64>>,
    /// `[column, factor]`: rescale one feature column.
    pub column_scale: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub variant: Variant,
    pub step: f64,
    pub iters: usize,
    pub burn_in: Option<usize>,
    pub beta: Option<f64>,
    #[serde(default)]
    pub tau_mode: TauMode,
    #[serde(default)]
    pub tau_init: TauInit,
    pub source: Option<GradientSource>,
}

impl SamplerSpec {
    pub fn to_config(&self, seed: u64) -> SamplerConfig {
        let mut c = SamplerConfig::new(self.variant, self.step, self.iters)
            .with_seed(seed)
            .with_beta(self.beta.unwrap_or(SamplerConfig::DEFAULT_BETA))
            .with_tau(self.tau_mode, self.tau_init)
            .with_source(self.source.unwrap_or(GradientSource::Exact));
        if let Some(b) = self.burn_in {
            c = c.with_burn_in(b);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Variants to sweep; `[sampler].variant` alone when omitted.
    pub variants: Option<Vec<Variant>>,
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// True gradient `δ`.
    pub grad: f64,
    /// Noise scale `τ`.
    pub tau: f64,
    /// Explicit increment grid; otherwise `points` values from `z_min` to `z_max`.
    pub z: Option<Vec<f64>>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub points: Option<usize>,
    #[serde(default = "default_laws")]
    pub laws: Vec<NoiseLaw>,
    pub draws: usize,
}

fn default_laws() -> Vec<NoiseLaw> {
    vec![NoiseLaw::Gaussian]
}

impl CurveSpec {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        if let Some(z) = &self.z {
            if z.is_empty() {
                return Err(CliError::Config("curve.z must be non-empty".into()));
            }
            return Ok(z.clone());
        }
        match (self.z_min, self.z_max, self.points) {
            (Some(lo), Some(hi), Some(n)) if n >= 1 && hi >= lo => Ok(sgbd::experiments::linspace(lo, hi, n)),
            _ => Err(CliError::Config("curve needs `z` or `z_min <= z_max` and `points >= 1`".into())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Denominator of the variance bias.
    #[serde(default)]
    pub var_scale: VarBiasScale,
    /// Exact-gradient Barker chain used as ground truth for models without
    /// closed-form moments.
    pub reference: Option<ReferenceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub step: f64,
    pub iters: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// Presence of the sections the kind needs, and their basic ranges.
    pub fn validate(&self) -> CliResult<()> {
        let missing = |s: &str| CliError::Config(format!("kind `{}` needs a [{s}] section", self.kind.name()));
        match self.kind {
            Kind::Run | Kind::Sweep => {
                let model = self.model.as_ref().ok_or_else(|| missing("model"))?;
                let sampler = self.sampler.as_ref().ok_or_else(|| missing("sampler"))?;
                model.validate()?;
                sampler.to_config(self.seed).validate(usize::MAX).map_err(CliError::from)?;
                if self.kind == Kind::Sweep {
                    let sweep = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                    if sweep.steps.is_empty() || sweep.variants.as_ref().is_some_and(|v| v.is_empty()) {
                        return Err(CliError::Config("sweep grid must be non-empty".into()));
                    }
                }
                if let Some(r) = &self.diagnostics.reference {
                    if !(r.step > 0.0) || r.iters < 10 {
                        return Err(CliError::Config("reference needs step > 0 and iters >= 10".into()));
                    }
                }
            }
            Kind::Curve => {
                let curve = self.curve.as_ref().ok_or_else(|| missing("curve"))?;
                curve.grid()?;
                if !(curve.tau >= 0.0) || !curve.grad.is_finite() || curve.laws.is_empty() {
                    return Err(CliError::Config("curve needs finite grad, tau >= 0 and at least one law".into()));
                }
                if curve.draws < sgbd::experiments::MIN_CURVE_DRAWS {
                    return Err(CliError::Config(format!(
                        "curve.draws must be at least {}",
                        sgbd::experiments::MIN_CURVE_DRAWS
                    )));
                }
            }
            Kind::SkewStudy => {
                self.skew_study.as_ref().ok_or_else(|| missing("skew_study"))?;
            }
            Kind::HeavytailStudy => {
                self.heavytail_study.as_ref().ok_or_else(|| missing("heavytail_study"))?;
            }
            Kind::LogregStudy => {
                self.logreg_study.as_ref().ok_or_else(|| missing("logreg_study"))?;
            }
        }
        Ok(())
    }
}

impl ModelSpec {
    fn validate(&self) -> CliResult<()> {
        match self {
            ModelSpec::StdNormal { dim } if *dim == 0 => Err(CliError::Config("dim must be >= 1".into())),
            ModelSpec::SkewNormal { alpha } if !(*alpha >= 0.0 && alpha.is_finite()) => {
                Err(CliError::Config("alpha must be finite and >= 0".into()))
            }
            ModelSpec::Logistic { csv, synthetic } if csv.is_some() == synthetic.is_some() => {
                Err(CliError::Config("logistic model needs exactly one of `csv` or `synthetic`".into()))
            }
            _ => Ok(()),
        }
    }
}
