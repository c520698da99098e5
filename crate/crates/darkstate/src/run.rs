//! Executing scenarios and sweeps, and writing their files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use darkstate_core::dynamics::{IntegrateOptions, SteadyStateOptions, SteadyStateReport};
use darkstate_core::engine::{EngineError, Simulation, System};
use darkstate_core::observables::fidelity;

use crate::config::{ConfigError, EngineKind, Scenario};
use crate::output;
use crate::sweep::{self, SweepError, SweepResult};

/// Overrides `output.dir` of every config.
pub const OUT_DIR_ENV: &str = "DARKSTATE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{engine} engine: {source}")]
    Numeric { engine: &'static str, source: EngineError },
    #[error("scenario has no [sweep] table")]
    NoSweep,
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl RunError {
    /// 1 for invalid input, 2 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::NoSweep => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineRun {
    pub kind: EngineKind,
    pub dimension: usize,
    pub simulation: Simulation,
    /// Steady state and its fidelity, if requested.
    pub steady: Option<(SteadyStateReport, f64)>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub engines: Vec<EngineRun>,
    pub max_fidelity_difference: Option<f64>,
}

impl ScenarioResult {
    pub fn engine(&self, kind: EngineKind) -> Option<&EngineRun> {
        self.engines.iter().find(|e| e.kind == kind)
    }
}

pub fn build_system(scenario: &Scenario, kind: EngineKind) -> Result<System, EngineError> {
    match kind {
        EngineKind::Full => System::full(&scenario.params, &scenario.scheme),
        EngineKind::Effective => System::effective(&scenario.params, &scenario.scheme),
    }
}

/// Runs every engine of a validated scenario; writes nothing.
pub fn execute(scenario: &Scenario) -> Result<ScenarioResult, RunError> {
    let cfg = &scenario.config;
    let grid = System::time_grid(scenario.params.t_end, cfg.run.sample_dt).map_err(|source| RunError::Numeric { engine: "grid", source })?;
    let opts = IntegrateOptions { check_positivity: cfg.run.check_positivity, ..IntegrateOptions::from_params(&scenario.params) };
    let mut engines = Vec::new();
    for &kind in &cfg.engines {
        let numeric = |source| RunError::Numeric { engine: kind.name(), source };
        let start = Instant::now();
        let sys = build_system(scenario, kind).map_err(numeric)?;
        let simulation = sys.simulate(&sys.initial_state(&cfg.initial).map_err(numeric)?, &grid, &opts).map_err(numeric)?;
        let steady = if cfg.run.steady {
            let report = sys.steady_state(&SteadyStateOptions::default()).map_err(numeric)?;
            let f = fidelity(&report.state, &sys.target).map_err(|e| numeric(e.into()))?;
            Some((report, f))
        } else {
            None
        };
        engines.push(EngineRun { kind, dimension: sys.dim(), simulation, steady, wall_time_s: start.elapsed().as_secs_f64() });
    }
    let max_fidelity_difference = match (engines.iter().find(|e| e.kind == EngineKind::Full), engines.iter().find(|e| e.kind == EngineKind::Effective)) {
        (Some(a), Some(b)) => Some(a.simulation.fidelity.max_abs_difference(&b.simulation.fidelity).map_err(|e| RunError::Numeric {
            engine: "comparison",
            source: e.into(),
        })?),
        _ => None,
    };
    Ok(ScenarioResult { engines, max_fidelity_difference })
}

/// Output directory: the environment override, else the config's.
pub fn output_dir(scenario: &Scenario) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(&scenario.config.output.dir))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::Output { path: path.display().to_string(), message: e.to_string() })
}

fn prepare_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Output { path: dir.display().to_string(), message: e.to_string() })
}

/// Writes the trajectory CSV, the JSON summary and the optional extras.
/// Returns the paths written.
pub fn write_outputs(scenario: &Scenario, result: &ScenarioResult, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    prepare_dir(dir)?;
    let stem = scenario.config.stem();
    let mut written = Vec::new();

    let cols = output::trajectory_columns(scenario, result);
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    output::write_trajectory_csv(&mut buf, &cols).map_err(|e| RunError::Output { path: csv_path.display().to_string(), message: e.to_string() })?;
    write_file(&csv_path, &buf)?;
    written.push(csv_path);

    if scenario.config.output.gnuplot {
        let path = dir.join(format!("{stem}.gp"));
        write_file(&path, output::gnuplot_script(&format!("{stem}.csv"), &cols, &scenario.config.name).as_bytes())?;
        written.push(path);
    }
    if scenario.config.output.effective_operators {
        let path = dir.join(format!("{stem}.effective.json"));
        let sys = build_system(scenario, EngineKind::Effective).map_err(|source| RunError::Numeric { engine: "effective", source })?;
        write_file(&path, &serde_json::to_vec_pretty(&output::effective_operators_json(&sys)).expect("serializable"))?;
        written.push(path);
    }

    let summary_path = dir.join(format!("{stem}.json"));
    let mut names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    names.push(summary_path.display().to_string());
    let summary = output::run_summary(scenario, result, names);
    write_file(&summary_path, &serde_json::to_vec_pretty(&summary).expect("serializable"))?;
    written.push(summary_path);
    Ok(written)
}

/// Validate, execute, write. Nothing is written unless validation passes.
pub fn run_scenario(config: &crate::config::ScenarioConfig) -> Result<(ScenarioResult, Vec<PathBuf>), RunError> {
    let scenario = config.validate()?;
    let result = execute(&scenario)?;
    let files = write_outputs(&scenario, &result, &output_dir(&scenario))?;
    Ok((result, files))
}

pub fn execute_sweep(scenario: &Scenario) -> Result<SweepResult, RunError> {
    let spec = scenario.config.sweep.as_ref().ok_or(RunError::NoSweep)?;
    Ok(sweep::sweep(&scenario.params, &scenario.scheme, spec, &scenario.config.initial, scenario.config.run.sample_dt))
}

#[derive(serde::Serialize)]
struct SweepJson<'a> {
    software: &'static str,
    version: &'static str,
    scenario: &'a str,
    config: &'a crate::config::ScenarioConfig,
    optimum: Option<(Vec<f64>, f64)>,
    result: &'a SweepResult,
}

/// Writes `<stem>.sweep.csv` and `<stem>.sweep.json`.
pub fn write_sweep(scenario: &Scenario, result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    prepare_dir(dir)?;
    let stem = scenario.config.stem();
    let csv_path = dir.join(format!("{stem}.sweep.csv"));
    let mut buf = Vec::new();
    result.write_csv(&mut buf).map_err(|e| RunError::Output { path: csv_path.display().to_string(), message: e.to_string() })?;
    write_file(&csv_path, &buf)?;
    let json_path = dir.join(format!("{stem}.sweep.json"));
    let doc = SweepJson {
        software: "darkstate",
        version: output::VERSION,
        scenario: &scenario.config.name,
        config: &scenario.config,
        optimum: result.optimum(true).ok(),
        result,
    };
    write_file(&json_path, &serde_json::to_vec_pretty(&doc).expect("serializable"))?;
    Ok(vec![csv_path, json_path])
}

pub fn run_sweep(config: &crate::config::ScenarioConfig) -> Result<(SweepResult, Vec<PathBuf>), RunError> {
    let scenario = config.validate()?;
    let result = execute_sweep(&scenario)?;
    let files = write_sweep(&scenario, &result, &output_dir(&scenario))?;
    Ok((result, files))
}
