//! Scenario files (TOML). Physics values are in units of `g`; an optional
//! `[mhz]` block takes laboratory values in MHz and divides them by `g`.

use std::path::Path;

use darkstate_core::model::presets::{ndim_scheme, paper_3d_scheme};
use darkstate_core::model::{LevelScheme, SimParams};
use serde::{Deserialize, Serialize};

use crate::sweep::SweepSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Full,
    Effective,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Effective => "effective",
        }
    }
}

/// A bundled scheme by name (`paper-3d`, `ndim-N`) or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeRef {
    Named(String),
    Inline(Box<LevelScheme>),
}

impl SchemeRef {
    pub fn resolve(&self) -> Result<LevelScheme, ConfigError> {
        let scheme = match self {
            Self::Named(name) if name == "paper-3d" => paper_3d_scheme(),
            Self::Named(name) => {
                let n = name
                    .strip_prefix("ndim-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| ConfigError::invalid("scheme", format!("unknown scheme `{name}` (expected `paper-3d` or `ndim-N`)")))?;
                ndim_scheme(n).map_err(|e| ConfigError::invalid("scheme", e.to_string()))?
            }
            Self::Inline(s) => (**s).clone(),
        };
        scheme.validate().map_err(|e| ConfigError::invalid("scheme", e.to_string()))?;
        Ok(scheme)
    }
}

/// Physics and numerics in units of `g`. Absent entries take the defaults
/// of [`SimParams`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub g: Option<f64>,
    #[serde(rename = "Omega")]
    pub rabi: Option<f64>,
    #[serde(rename = "omega")]
    pub microwave: Option<f64>,
    /// `omega` as a multiple of `Omega`; exclusive with `omega`.
    #[serde(rename = "omega_over_Omega")]
    pub microwave_ratio: Option<f64>,
    #[serde(rename = "Delta")]
    pub detuning: Option<f64>,
    /// Defaults to `g^2 / Delta`.
    #[serde(rename = "delta")]
    pub cavity_detuning: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub n_max: Option<usize>,
    pub t_end: Option<f64>,
    pub dt_initial: Option<f64>,
    pub tol: Option<f64>,
}

/// Laboratory values in MHz (any common factor such as `2 pi` cancels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhzBlock {
    pub g: f64,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "Omega")]
    pub rabi: Option<f64>,
    #[serde(rename = "omega")]
    pub microwave: Option<f64>,
    #[serde(rename = "Delta")]
    pub detuning: Option<f64>,
    #[serde(rename = "delta")]
    pub cavity_detuning: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Fidelity,
    Populations,
    Excited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Spacing of the recorded samples.
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Also solve for the steady state of every engine.
    #[serde(default = "yes")]
    pub steady: bool,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    /// Ground configurations whose populations are written; all when empty.
    #[serde(default)]
    pub populations: Vec<String>,
    /// Record the smallest eigenvalue of every sample (one dense eigensolve each).
    #[serde(default = "yes")]
    pub check_positivity: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self { sample_dt: default_sample_dt(), steady: true, observables: default_observables(), populations: Vec::new(), check_positivity: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// File name stem; the scenario name when absent.
    pub prefix: Option<String>,
    #[serde(default = "yes")]
    pub gnuplot: bool,
    /// Write `H_eff` and the effective Lindblad operators as JSON.
    #[serde(default)]
    pub effective_operators: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir(), prefix: None, gnuplot: true, effective_operators: false }
    }
}

fn default_sample_dt() -> f64 {
    10.0
}
fn yes() -> bool {
    true
}
fn default_observables() -> Vec<Observable> {
    vec![Observable::Fidelity]
}
fn default_dir() -> String {
    "out".into()
}
fn default_initial() -> String {
    "ga gL".into()
}
fn default_engines() -> Vec<EngineKind> {
    vec![EngineKind::Full]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scheme: SchemeRef,
    /// Ground configuration such as `"ga gL"`; cavity starts in vacuum.
    #[serde(default = "default_initial")]
    pub initial: String,
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineKind>,
    #[serde(default)]
    pub params: ParamsBlock,
    pub mhz: Option<MhzBlock>,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
    pub sweep: Option<SweepSpec>,
}

/// A config checked against its scheme, with parameters in units of `g`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub scheme: LevelScheme,
    pub params: SimParams,
}

fn check_positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be positive and finite, got {x}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Merges the `[params]` and `[mhz]` blocks into [`SimParams`].
    pub fn resolve_params(&self) -> Result<SimParams, ConfigError> {
        let p = &self.params;
        let mut out = SimParams::default();
        let set = |field: &str, slot: &mut f64, g_units: Option<f64>, mhz: Option<f64>, g_mhz: f64| -> Result<(), ConfigError> {
            match (g_units, mhz) {
                (Some(_), Some(_)) => Err(ConfigError::invalid(field, "given in both [params] and [mhz]")),
                (Some(v), None) => {
                    *slot = v;
                    Ok(())
                }
                (None, Some(v)) => {
                    *slot = v / g_mhz;
                    Ok(())
                }
                (None, None) => Ok(()),
            }
        };
        let none = MhzBlock { g: 1.0, kappa: None, gamma: None, rabi: None, microwave: None, detuning: None, cavity_detuning: None };
        let m = self.mhz.as_ref().unwrap_or(&none);
        if self.mhz.is_some() {
            check_positive("mhz.g", m.g)?;
            if p.g.is_some_and(|g| g != 1.0) {
                return Err(ConfigError::invalid("params.g", "must be 1 (or absent) when an [mhz] block sets the unit"));
            }
        }
        out.g = p.g.unwrap_or(1.0);
        set("kappa", &mut out.kappa, p.kappa, m.kappa, m.g)?;
        set("gamma", &mut out.gamma, p.gamma, m.gamma, m.g)?;
        set("Omega", &mut out.rabi, p.rabi, m.rabi, m.g)?;
        set("Delta", &mut out.detuning, p.detuning, m.detuning, m.g)?;
        let mut omega = out.microwave;
        set("omega", &mut omega, p.microwave, m.microwave, m.g)?;
        if let Some(r) = p.microwave_ratio {
            if p.microwave.is_some() || m.microwave.is_some() {
                return Err(ConfigError::invalid("omega_over_Omega", "exclusive with `omega`"));
            }
            omega = r * out.rabi;
        }
        out.microwave = omega;
        let mut delta = f64::NAN;
        set("delta", &mut delta, p.cavity_detuning, m.cavity_detuning, m.g)?;
        out.cavity_detuning = (!delta.is_nan()).then_some(delta);
        if let Some(n) = p.n_max {
            out.n_max = n;
        }
        if let Some(t) = p.t_end {
            out.t_end = t;
        }
        if let Some(dt) = p.dt_initial {
            out.dt_initial = dt;
        }
        if let Some(tol) = p.tol {
            out.tol = tol;
        }
        out.validate().map_err(|e| ConfigError::invalid("params", e.to_string()))?;
        Ok(out)
    }

    /// Full semantic validation.
    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::invalid("name", "must not be empty"));
        }
        let scheme = self.scheme.resolve()?;
        let params = self.resolve_params()?;
        let labels = scheme.ground_labels();
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        if !labels.contains(&norm(&self.initial)) {
            return Err(ConfigError::invalid("initial", format!("`{}` is not a ground configuration of `{}`", self.initial, scheme.name)));
        }
        if let Some(bad) = self.run.populations.iter().find(|p| !labels.contains(&norm(p))) {
            return Err(ConfigError::invalid("run.populations", format!("`{bad}` is not a ground configuration")));
        }
        if self.engines.is_empty() {
            return Err(ConfigError::invalid("engines", "at least one engine is required"));
        }
        if self.engines.contains(&EngineKind::Effective) && params.kappa != 0.0 {
            return Err(ConfigError::invalid("engines", "the effective engine requires kappa = 0"));
        }
        check_positive("run.sample_dt", self.run.sample_dt)?;
        if self.run.sample_dt > params.t_end {
            return Err(ConfigError::invalid("run.sample_dt", "exceeds t_end"));
        }
        if let Some(s) = &self.sweep {
            s.validate(&params)?;
        }
        Ok(Scenario { config: self.clone(), scheme, params })
    }

    /// Output file stem.
    pub fn stem(&self) -> String {
        self.output.prefix.clone().unwrap_or_else(|| self.name.clone())
    }
}

impl Scenario {
    /// Population labels to report, normalized.
    pub fn population_labels(&self) -> Vec<String> {
        if self.config.run.populations.is_empty() {
            self.scheme.ground_labels()
        } else {
            self.config.run.populations.iter().map(|p| p.split_whitespace().collect::<Vec<_>>().join(" ")).collect()
        }
    }
}
