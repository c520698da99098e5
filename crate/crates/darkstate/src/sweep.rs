//! Parameter sweeps. Points are independent and run on the rayon pool;
//! records come back in enumeration order regardless of completion order.

use std::time::{Duration, Instant};

use darkstate_core::dynamics::{DynamicsError, IntegrateOptions, SteadyStateOptions};
use darkstate_core::engine::{EngineError, System};
use darkstate_core::model::{LevelScheme, SimParams};
use darkstate_core::observables::fidelity;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, EngineKind};

/// Parameters a sweep axis may name. Ratios are applied after absolute values.
pub const AXIS_NAMES: [&str; 10] = ["g", "Omega", "omega", "omega_over_Omega", "Delta", "delta", "gamma", "kappa", "gamma_over_kappa", "n_max"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `<T|rho_ss|T>`.
    SteadyFidelity,
    /// Fidelity at `time`, starting from the scenario's initial state.
    FidelityAtTime,
    /// First time from which the fidelity stays flat up to `time`.
    ConvergenceTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Explicit parameter points instead of a Cartesian grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointList {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub metric: Metric,
    /// Horizon for time-based metrics; `t_end` when absent.
    pub time: Option<f64>,
    #[serde(default = "full")]
    pub engine: EngineKind,
    /// Defaults to `min` for convergence time and `max` otherwise.
    pub objective: Option<Objective>,
    /// Per-point wall-clock limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default, rename = "axis")]
    pub axes: Vec<Axis>,
    pub points: Option<PointList>,
}

fn full() -> EngineKind {
    EngineKind::Full
}
fn default_timeout() -> f64 {
    3600.0
}

impl SweepSpec {
    pub fn objective(&self) -> Objective {
        self.objective.unwrap_or(match self.metric {
            Metric::ConvergenceTime => Objective::Min,
            _ => Objective::Max,
        })
    }

    /// Axis names in enumeration order.
    pub fn names(&self) -> Vec<String> {
        match &self.points {
            Some(p) => p.names.clone(),
            None => self.axes.iter().map(|a| a.name.clone()).collect(),
        }
    }

    /// Every point; the last axis varies fastest.
    pub fn enumerate(&self) -> Vec<Vec<f64>> {
        if let Some(p) = &self.points {
            return p.values.clone();
        }
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out.into_iter().flat_map(|head| axis.values.iter().map(move |&v| [head.clone(), vec![v]].concat())).collect();
        }
        out
    }

    pub fn validate(&self, base: &SimParams) -> Result<(), ConfigError> {
        let field = "sweep";
        let names = self.names();
        match (&self.points, self.axes.is_empty()) {
            (Some(_), false) => return Err(ConfigError::invalid(field, "give either `axis` tables or `points`, not both")),
            (None, true) => return Err(ConfigError::invalid(field, "grid is empty")),
            _ => {}
        }
        for (k, n) in names.iter().enumerate() {
            if !AXIS_NAMES.contains(&n.as_str()) {
                return Err(ConfigError::invalid("sweep.axis", format!("unknown parameter `{n}` (one of {})", AXIS_NAMES.join(", "))));
            }
            if names[..k].contains(n) {
                return Err(ConfigError::invalid("sweep.axis", format!("`{n}` appears twice")));
            }
        }
        if self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(ConfigError::invalid("sweep.axis", "every axis needs at least one value"));
        }
        if let Some(p) = &self.points {
            if p.values.is_empty() || p.values.iter().any(|v| v.len() != p.names.len()) {
                return Err(ConfigError::invalid("sweep.points", "need at least one point, each with one value per name"));
            }
        }
        if !(self.timeout_s > 0.0) {
            return Err(ConfigError::invalid("sweep.timeout_s", "must be positive"));
        }
        if self.time.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(ConfigError::invalid("sweep.time", "must be positive"));
        }
        for point in self.enumerate() {
            let p = apply_point(base, &names, &point).map_err(|m| ConfigError::invalid("sweep", m))?;
            if self.engine == EngineKind::Effective && p.kappa != 0.0 {
                return Err(ConfigError::invalid("sweep.engine", "the effective engine requires kappa = 0 at every point"));
            }
        }
        Ok(())
    }
}

/// Base parameters with one grid point substituted.
pub fn apply_point(base: &SimParams, names: &[String], values: &[f64]) -> Result<SimParams, String> {
    let mut p = *base;
    let pairs: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(values.iter().copied()).collect();
    for &(n, v) in &pairs {
        match n {
            "g" => p.g = v,
            "Omega" => p.rabi = v,
            "omega" => p.microwave = v,
            "Delta" => p.detuning = v,
            "delta" => p.cavity_detuning = Some(v),
            "gamma" => p.gamma = v,
            "kappa" => p.kappa = v,
            "n_max" => {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(format!("n_max must be a non-negative integer, got {v}"));
                }
                p.n_max = v as usize;
            }
            _ => {}
        }
    }
    for &(n, v) in &pairs {
        match n {
            "omega_over_Omega" => p.microwave = v * p.rabi,
            "gamma_over_kappa" => p.gamma = v * p.kappa,
            _ => {}
        }
    }
    p.validate().map_err(|e| format!("point {values:?}: {e}"))?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    /// The metric could not be determined within the horizon.
    NotConverged,
    TimedOut,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: Vec<f64>,
    pub value: Option<f64>,
    pub wall_time_s: f64,
    pub status: PointStatus,
}

impl SweepRecord {
    pub fn converged(&self) -> bool {
        self.status == PointStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub metric: Metric,
    pub objective: Objective,
    pub engine: EngineKind,
    pub base: SimParams,
    pub records: Vec<SweepRecord>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SweepError {
    #[error("sweep has no points")]
    Empty,
    #[error("{0} of {1} points did not converge")]
    Incomplete(usize, usize),
}

/// Lexicographic order on parameter vectors (axis order), NaN last.
fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

impl SweepResult {
    fn best(&self, want_max: bool, partial: bool) -> Result<(Vec<f64>, f64), SweepError> {
        if self.records.is_empty() {
            return Err(SweepError::Empty);
        }
        let failed = self.records.iter().filter(|r| !r.converged()).count();
        if failed > 0 && !partial {
            return Err(SweepError::Incomplete(failed, self.records.len()));
        }
        let mut best: Option<&SweepRecord> = None;
        for r in self.records.iter().filter(|r| r.converged()) {
            let v = r.value.expect("converged records carry a value");
            best = match best {
                None => Some(r),
                Some(b) => {
                    let bv = b.value.unwrap();
                    let better = if want_max { v > bv } else { v < bv };
                    if better || (v == bv && lex(&r.point, &b.point).is_lt()) {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let b = best.ok_or(SweepError::Incomplete(failed, self.records.len()))?;
        Ok((b.point.clone(), b.value.unwrap()))
    }

    /// Largest value; ties go to the lexicographically smallest point in
    /// axis order. With `partial`, unconverged points are skipped instead
    /// of failing.
    pub fn argmax(&self, partial: bool) -> Result<(Vec<f64>, f64), SweepError> {
        self.best(true, partial)
    }

    pub fn argmin(&self, partial: bool) -> Result<(Vec<f64>, f64), SweepError> {
        self.best(false, partial)
    }

    /// Best point under the sweep's objective.
    pub fn optimum(&self, partial: bool) -> Result<(Vec<f64>, f64), SweepError> {
        self.best(self.objective == Objective::Max, partial)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = self.axes.clone();
        header.extend(["value", "status", "wall_time_s"].map(String::from));
        out.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.point.iter().map(|v| format!("{v}")).collect();
            row.push(r.value.map(|v| format!("{v}")).unwrap_or_default());
            row.push(match &r.status {
                PointStatus::Converged => "converged".into(),
                PointStatus::NotConverged => "not_converged".into(),
                PointStatus::TimedOut => "timed_out".into(),
                PointStatus::Failed(m) => format!("failed: {m}"),
            });
            row.push(format!("{:.3}", r.wall_time_s));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates one point. Never panics on numerical failure.
pub fn evaluate_point(params: &SimParams, scheme: &LevelScheme, spec: &SweepSpec, initial: &str, sample_dt: f64) -> SweepRecord {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(spec.timeout_s);
    let mut abort = || Instant::now() > deadline;
    let result = metric_value(params, scheme, spec, initial, sample_dt, &mut abort);
    let (value, status) = match result {
        Ok(Some(v)) => (Some(v), PointStatus::Converged),
        Ok(None) => (None, PointStatus::NotConverged),
        Err(EngineError::Dynamics(DynamicsError::Aborted(_))) => (None, PointStatus::TimedOut),
        Err(e) => (None, PointStatus::Failed(e.to_string())),
    };
    SweepRecord { point: Vec::new(), value, wall_time_s: start.elapsed().as_secs_f64(), status }
}

fn metric_value(
    params: &SimParams,
    scheme: &LevelScheme,
    spec: &SweepSpec,
    initial: &str,
    sample_dt: f64,
    abort: &mut dyn FnMut() -> bool,
) -> Result<Option<f64>, EngineError> {
    let sys = match spec.engine {
        EngineKind::Full => System::full(params, scheme)?,
        EngineKind::Effective => System::effective(params, scheme)?,
    };
    let horizon = spec.time.unwrap_or(params.t_end);
    let opts = IntegrateOptions::from_params(params);
    match spec.metric {
        Metric::SteadyFidelity => {
            let ss = sys.steady_state_abortable(&SteadyStateOptions::default(), abort)?;
            Ok(Some(fidelity(&ss.state, &sys.target)?))
        }
        Metric::FidelityAtTime => {
            let sim = sys.simulate_with(&sys.initial_state(initial)?, &[0.0, horizon], &opts, abort)?;
            Ok(sim.fidelity.last())
        }
        Metric::ConvergenceTime => {
            let grid = System::time_grid(horizon, sample_dt)?;
            let sim = sys.simulate_with(&sys.initial_state(initial)?, &grid, &opts, abort)?;
            Ok(sim.convergence_time())
        }
    }
}

/// Runs every point of `spec` around `base`.
pub fn sweep(base: &SimParams, scheme: &LevelScheme, spec: &SweepSpec, initial: &str, sample_dt: f64) -> SweepResult {
    let names = spec.names();
    let records = spec
        .enumerate()
        .into_par_iter()
        .map(|point| {
            let mut rec = match apply_point(base, &names, &point) {
                Ok(p) => evaluate_point(&p, scheme, spec, initial, sample_dt),
                Err(m) => SweepRecord { point: Vec::new(), value: None, wall_time_s: 0.0, status: PointStatus::Failed(m) },
            };
            rec.point = point;
            rec
        })
        .collect();
    SweepResult { axes: names, metric: spec.metric, objective: spec.objective(), engine: spec.engine, base: *base, records }
}
