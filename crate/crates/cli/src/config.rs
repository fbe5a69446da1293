//! The JSON experiment document and its translation into library models.

use std::fmt;

use acovlab::coeffmodel::SlowlyVarying;
use acovlab::innovations::MomentClass;
use acovlab::limitlaws::{LimitOptions, Region};
use acovlab::mcharness::{ExperimentConfig, PhaseCell, Tolerances, TruncationRule};
use acovlab::{CoefficientModel, InnovationModel};
use serde::{Deserialize, Serialize};

/// A usage or validation problem; always exits with status 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<acovlab::Error> for ConfigError {
    fn from(e: acovlab::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn missing(field: &str) -> ConfigError {
    ConfigError(format!("invalid config: missing field `{field}`"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    PowerLaw {
        d: f64,
        #[serde(rename = "C_d", default = "one")]
        c_d: f64,
        #[serde(default = "constant_l")]
        l: SlowlyVarying,
        #[serde(default = "one")]
        psi0: f64,
    },
    Explicit {
        coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnovSpec {
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    /// Unit variance unless `scale` is given.
    Student {
        nu: f64,
        #[serde(default)]
        scale: Option<f64>,
    },
    Pareto {
        alpha: f64,
        #[serde(default = "half")]
        p: f64,
    },
}

/// One phase-diagram cell; `alpha` absent means a finite fourth moment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    #[serde(default)]
    pub alpha: Option<f64>,
    pub d: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn constant_l() -> SlowlyVarying {
    SlowlyVarying::Constant
}

fn default_r() -> usize {
    1000
}

fn default_h() -> usize {
    2
}

fn default_span() -> f64 {
    5.0
}

fn default_grid() -> usize {
    1000
}

fn default_draws() -> usize {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub coeff: Option<CoeffSpec>,
    #[serde(default)]
    pub innov: Option<InnovSpec>,
    #[serde(rename = "N", default)]
    pub n: Vec<usize>,
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    #[serde(rename = "H", default = "default_h")]
    pub h: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Fixed simulation order; overrides `rel_tol`.
    #[serde(rename = "M", default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    /// Region C span `K`, also used for `M = K·N`.
    #[serde(default = "default_span")]
    pub span: f64,
    /// Rosenblatt grid `N_g`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub far_field: bool,
    #[serde(default = "default_draws")]
    pub limit_draws: usize,
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ConfigFile {
    /// Reads a file path, or inline JSON when the argument starts with `{`.
    pub fn load(arg: &str) -> Result<Self, ConfigError> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else {
            std::fs::read_to_string(arg).map_err(|e| ConfigError(format!("cannot read config {arg}: {e}")))?
        };
        let cfg: ConfigFile =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that the library models do not cover.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(c) = &self.coeff {
            c.model()?;
        }
        if let Some(i) = &self.innov {
            i.model()?;
        }
        if self.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError("invalid N: the N grid must be strictly increasing".into()));
        }
        if self.n.first() == Some(&0) {
            return Err(ConfigError("invalid N: sizes must be positive".into()));
        }
        if let Some(t) = self.rel_tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(ConfigError("invalid rel_tol: rel_tol must lie in (0, 1)".into()));
            }
        }
        if !(self.span >= 1.0) {
            return Err(ConfigError("invalid span: span must be at least 1".into()));
        }
        for c in &self.cells {
            c.cell()?.innovations()?;
        }
        Ok(())
    }

    pub fn coeff(&self) -> Result<CoefficientModel, ConfigError> {
        self.coeff.as_ref().ok_or_else(|| missing("coeff"))?.model()
    }

    pub fn innov(&self) -> Result<InnovationModel, ConfigError> {
        self.innov.as_ref().ok_or_else(|| missing("innov"))?.model()
    }

    pub fn grid(&self) -> Result<&[usize], ConfigError> {
        if self.n.is_empty() {
            return Err(missing("N"));
        }
        Ok(&self.n)
    }

    pub fn truncation(&self) -> TruncationRule {
        match (self.m, self.rel_tol) {
            (Some(m), _) => TruncationRule::Fixed { m },
            (None, Some(rel_tol)) => TruncationRule::Tolerance { rel_tol },
            (None, None) => TruncationRule::Auto,
        }
    }

    pub fn limit_options(&self, allow_boundary: bool) -> LimitOptions {
        LimitOptions {
            grid: self.grid,
            span: self.span,
            far_field: self.far_field,
            allow_boundary,
            ..LimitOptions::default()
        }
    }

    pub fn experiment(&self, allow_boundary: bool) -> Result<ExperimentConfig, ConfigError> {
        let mut c = ExperimentConfig::new(self.coeff()?, self.innov()?, self.grid()?.to_vec());
        c.replications = self.r;
        c.lags = self.h;
        c.seed = self.seed;
        c.regime_override = self.region;
        c.allow_boundary = allow_boundary;
        c.truncation = self.truncation();
        c.limit_draws = self.limit_draws;
        c.limit = self.limit_options(allow_boundary);
        c.tolerances = self.tolerances.clone();
        c.validate()?;
        Ok(c)
    }

    pub fn cells(&self) -> Result<Vec<PhaseCell>, ConfigError> {
        if self.cells.is_empty() {
            return Err(missing("cells"));
        }
        self.cells.iter().map(CellSpec::cell).collect()
    }
}

impl CoeffSpec {
    pub fn model(&self) -> Result<CoefficientModel, ConfigError> {
        Ok(match self {
            CoeffSpec::PowerLaw { d, c_d, l, psi0 } => CoefficientModel::power_law(*d, *c_d)?
                .with_slowly_varying(*l)?
                .with_psi0(*psi0)?,
            CoeffSpec::Explicit { coeffs } => CoefficientModel::explicit(coeffs.clone())?,
        })
    }
}

impl InnovSpec {
    pub fn model(&self) -> Result<InnovationModel, ConfigError> {
        Ok(match *self {
            InnovSpec::Gaussian { sigma } => InnovationModel::gaussian(sigma)?,
            InnovSpec::Student { nu, scale: None } => InnovationModel::student_unit_variance(nu)?,
            InnovSpec::Student { nu, scale: Some(s) } => InnovationModel::student(nu, s)?,
            InnovSpec::Pareto { alpha, p } => InnovationModel::pareto(alpha, p)?,
        })
    }
}

impl CellSpec {
    pub fn cell(&self) -> Result<PhaseCell, ConfigError> {
        let moment_class = match self.alpha {
            Some(alpha) => {
                if !(alpha > 2.0 && alpha < 4.0) {
                    return Err(ConfigError("invalid alpha: alpha must lie in (2, 4)".into()));
                }
                MomentClass::Heavy { alpha }
            }
            None => MomentClass::FiniteFourth,
        };
        if !(self.d > 0.0 && self.d < 0.5) {
            return Err(ConfigError("invalid d: d must lie in (0, 0.5)".into()));
        }
        Ok(PhaseCell {
            moment_class,
            d: self.d,
        })
    }
}
