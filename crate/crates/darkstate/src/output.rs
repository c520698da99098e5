//! Result files: trajectory CSV, JSON summary, effective operators and a
//! gnuplot script.

use std::io::Write;

use darkstate_core::dynamics::{IntegrationStats, SteadyMethod};
use darkstate_core::engine::System;
use darkstate_core::linalg::{CMatrix, C64};
use darkstate_core::model::SimParams;
use serde::Serialize;

use crate::config::{EngineKind, Observable, Scenario, ScenarioConfig};
use crate::run::{EngineRun, ScenarioResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column header and values of the trajectory table, `time` first.
pub fn trajectory_columns(scenario: &Scenario, result: &ScenarioResult) -> Vec<(String, Vec<f64>)> {
    let multi = result.engines.len() > 1;
    let suffix = |kind: EngineKind| if multi { format!("_{}", kind.name()) } else { String::new() };
    let mut cols = vec![("time".to_string(), result.engines[0].simulation.fidelity.times.clone())];
    let obs = &scenario.config.run.observables;
    for run in &result.engines {
        let sim = &run.simulation;
        let sfx = suffix(run.kind);
        if obs.contains(&Observable::Fidelity) {
            cols.push((format!("fidelity{sfx}"), sim.fidelity.values.clone()));
        }
        if obs.contains(&Observable::Populations) {
            for label in scenario.population_labels() {
                let series = sim.populations.iter().find(|s| s.name == label).expect("validated label");
                cols.push((format!("P{sfx}({label})"), series.values.clone()));
            }
        }
        if obs.contains(&Observable::Excited) && run.kind == EngineKind::Full {
            cols.push((format!("excited{sfx}"), sim.excited.values.clone()));
        }
    }
    cols
}

pub fn write_trajectory_csv<W: Write>(w: W, cols: &[(String, Vec<f64>)]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(cols.iter().map(|(h, _)| h.as_str()))?;
    for i in 0..cols[0].1.len() {
        out.write_record(cols.iter().map(|(_, v)| format!("{:.12e}", v[i])))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadySummary {
    pub fidelity: f64,
    pub method: SteadyMethod,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineSummary {
    pub engine: EngineKind,
    pub dimension: usize,
    pub final_fidelity: f64,
    /// First time from which the fidelity stays flat; absent if it never does.
    pub stationarity_time: Option<f64>,
    pub steady_state: Option<SteadySummary>,
    pub integration: IntegrationStats,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub scenario: &'a str,
    /// Parameters actually used, in units of `g`.
    pub params: SimParams,
    /// The config as given, for provenance.
    pub config: &'a ScenarioConfig,
    pub engines: Vec<EngineSummary>,
    /// `max_t |F_full - F_effective|` when both engines ran.
    pub max_fidelity_difference: Option<f64>,
    pub files: Vec<String>,
}

impl EngineRun {
    pub fn summary(&self) -> EngineSummary {
        EngineSummary {
            engine: self.kind,
            dimension: self.dimension,
            final_fidelity: self.simulation.final_fidelity(),
            stationarity_time: self.simulation.convergence_time(),
            steady_state: self.steady.as_ref().map(|(r, f)| SteadySummary { fidelity: *f, method: r.method, residual: r.residual }),
            integration: self.simulation.stats,
            wall_time_s: self.wall_time_s,
        }
    }
}

pub fn run_summary<'a>(scenario: &'a Scenario, result: &ScenarioResult, files: Vec<String>) -> RunSummary<'a> {
    RunSummary {
        software: "darkstate",
        version: VERSION,
        scenario: &scenario.config.name,
        params: scenario.params,
        config: &scenario.config,
        engines: result.engines.iter().map(EngineRun::summary).collect(),
        max_fidelity_difference: result.max_fidelity_difference,
        files,
    }
}

/// Complex matrix as separate real and imaginary row-major arrays.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexMatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for ComplexMatrixJson {
    fn from(m: &CMatrix) -> Self {
        let part = |f: fn(&C64) -> f64| (0..m.rows()).map(|i| m.row(i).iter().map(f).collect()).collect();
        Self { re: part(|z| z.re), im: part(|z| z.im) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledOperator {
    pub label: String,
    pub matrix: ComplexMatrixJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOperatorsJson {
    pub version: &'static str,
    pub params: SimParams,
    /// Ground configurations labelling rows and columns.
    pub basis: Vec<String>,
    pub hamiltonian: ComplexMatrixJson,
    pub lindblads: Vec<LabeledOperator>,
}

pub fn effective_operators_json(sys: &System) -> EffectiveOperatorsJson {
    EffectiveOperatorsJson {
        version: VERSION,
        params: sys.params,
        basis: sys.ground_labels.clone(),
        hamiltonian: (&sys.hamiltonian.to_dense()).into(),
        lindblads: sys.collapse.iter().map(|c| LabeledOperator { label: c.label.clone(), matrix: (&c.operator.to_dense()).into() }).collect(),
    }
}

/// Plots every non-time column of `csv_name` against time.
pub fn gnuplot_script(csv_name: &str, cols: &[(String, Vec<f64>)], title: &str) -> String {
    let mut s = format!(
        "# gnuplot {csv_name:?} script\nset datafile separator ','\nset key autotitle columnhead\nset xlabel 'g t'\nset title {title:?}\nset yrange [0:1]\nplot "
    );
    let series: Vec<String> = (2..=cols.len()).map(|k| format!("{csv_name:?} using 1:{k} with lines")).collect();
    s.push_str(&series.join(", \\\n     "));
    s.push_str("\npause -1\n");
    s
}
