//! Full and effective systems ready to simulate, with the standard
//! observables attached.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{
    integrate_with, steady_state_abortable, steady_state_with, DensityMatrix, DynamicsError, IntegrateOptions, IntegrationStats, Lindblad,
    Observer, SteadyStateOptions, SteadyStateReport,
};
use crate::effective::{effective_operators, EffectiveError};
use crate::hilbert::{build_space, Operator, SpaceRef};
use crate::linalg::{C64, ZERO};
use crate::model::{build_collapse_ops, build_hamiltonian, CollapseChannel, LevelScheme, ModelError, SimParams};
use crate::observables::{fidelity, ObservableError, ObservableSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Effective(#[from] EffectiveError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("unknown ground configuration `{0}` (expected e.g. \"ga gL\")")]
    UnknownState(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),
}

impl From<crate::hilbert::HilbertError> for EngineError {
    fn from(e: crate::hilbert::HilbertError) -> Self {
        Self::Dynamics(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Atoms plus Fock-truncated cavity modes.
    Full,
    /// Ground manifold after adiabatic elimination.
    Effective,
}

/// A Hamiltonian, its collapse channels and the target, on one space.
#[derive(Debug, Clone)]
pub struct System {
    pub kind: SystemKind,
    pub params: SimParams,
    pub space: SpaceRef,
    pub hamiltonian: Operator,
    pub collapse: Vec<CollapseChannel>,
    /// Flat index of each ground configuration (cavity vacuum), in
    /// `ground_labels` order.
    pub ground_indices: Vec<usize>,
    pub ground_labels: Vec<String>,
    /// Normalized target embedded in `space`.
    pub target: Vec<C64>,
    generator: Lindblad,
}

impl System {
    pub fn full(params: &SimParams, scheme: &LevelScheme) -> Result<Self, EngineError> {
        params.validate()?;
        scheme.validate()?;
        let space = build_space(scheme, params.n_max)?;
        let h = build_hamiltonian(params, scheme, &space)?;
        let ls = build_collapse_ops(params, scheme, &space)?;
        let n_modes = scheme.cavity_modes.len();
        let ground_indices = (0..scheme.atoms[0].ground.len())
            .flat_map(|i| (0..scheme.atoms[1].ground.len()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut m = alloc::vec![i, j];
                m.extend(core::iter::repeat(0).take(n_modes));
                space.flat_index(&m)
            })
            .collect();
        Self::assemble(SystemKind::Full, *params, space, h, ls, ground_indices, scheme)
    }

    /// Generic adiabatic elimination at `params.n_max`.
    pub fn effective(params: &SimParams, scheme: &LevelScheme) -> Result<Self, EngineError> {
        let m = effective_operators(params, scheme)?;
        let indices = (0..m.space.total_dim()).collect();
        Self::assemble(SystemKind::Effective, *params, m.space, m.hamiltonian, m.lindblads, indices, scheme)
    }

    fn assemble(
        kind: SystemKind,
        params: SimParams,
        space: SpaceRef,
        hamiltonian: Operator,
        collapse: Vec<CollapseChannel>,
        ground_indices: Vec<usize>,
        scheme: &LevelScheme,
    ) -> Result<Self, EngineError> {
        let mut target = alloc::vec![ZERO; space.total_dim()];
        for (&flat, amp) in ground_indices.iter().zip(scheme.target_vector()) {
            target[flat] = amp;
        }
        let generator = Lindblad::new(&hamiltonian, &collapse)?;
        Ok(Self { kind, params, space, hamiltonian, collapse, ground_indices, ground_labels: scheme.ground_labels(), target, generator })
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn generator(&self) -> &Lindblad {
        &self.generator
    }

    /// Flat index of a ground configuration such as `"ga gL"`.
    pub fn ground_index(&self, label: &str) -> Result<usize, EngineError> {
        let norm: Vec<&str> = label.split_whitespace().collect();
        let wanted = norm.join(" ");
        self.ground_labels
            .iter()
            .position(|l| *l == wanted)
            .map(|k| self.ground_indices[k])
            .ok_or_else(|| EngineError::UnknownState(String::from(label)))
    }

    /// Pure ground configuration, cavity in vacuum.
    pub fn initial_state(&self, label: &str) -> Result<DensityMatrix, EngineError> {
        Ok(DensityMatrix::basis_state(self.space.clone(), self.ground_index(label)?)?)
    }

    /// Evenly spaced samples `0, dt, ..., t_end` (the last one clipped to `t_end`).
    pub fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>, EngineError> {
        if !(t_end > 0.0 && t_end.is_finite()) || !(dt > 0.0) {
            return Err(EngineError::InvalidGrid("t_end and the sample step must be positive"));
        }
        let n = libm::ceil(t_end / dt - 1e-9) as usize;
        let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        grid.push(t_end);
        Ok(grid)
    }

    pub fn simulate(&self, rho0: &DensityMatrix, t_grid: &[f64], opts: &IntegrateOptions) -> Result<Simulation, EngineError> {
        self.simulate_with(rho0, t_grid, opts, &mut || false)
    }

    /// Like [`System::simulate`]; `abort` is polled once per integrator step.
    pub fn simulate_with(
        &self,
        rho0: &DensityMatrix,
        t_grid: &[f64],
        opts: &IntegrateOptions,
        abort: &mut dyn FnMut() -> bool,
    ) -> Result<Simulation, EngineError> {
        let mut rec = Recorder {
            sys: self,
            fidelity: ObservableSeries::new("fidelity"),
            populations: self.ground_labels.iter().map(|l| ObservableSeries::new(l.clone())).collect(),
            excited: ObservableSeries::new("excited"),
            last: None,
            error: None,
            abort,
        };
        let stats = integrate_with(&self.generator, rho0, t_grid, opts, &mut rec)?;
        if let Some(e) = rec.error {
            return Err(e.into());
        }
        Ok(Simulation {
            fidelity: rec.fidelity,
            populations: rec.populations,
            excited: rec.excited,
            final_state: rec.last.expect("grid is non-empty"),
            stats,
        })
    }

    pub fn steady_state(&self, opts: &SteadyStateOptions) -> Result<SteadyStateReport, EngineError> {
        Ok(steady_state_with(&self.generator, opts)?)
    }

    pub fn steady_state_abortable(&self, opts: &SteadyStateOptions, abort: &mut dyn FnMut() -> bool) -> Result<SteadyStateReport, EngineError> {
        Ok(steady_state_abortable(&self.generator, opts, abort)?)
    }

    /// `<target| rho_ss |target>`.
    pub fn steady_fidelity(&self) -> Result<f64, EngineError> {
        let ss = self.steady_state(&SteadyStateOptions::default())?;
        Ok(fidelity(&ss.state, &self.target)?)
    }

    /// Population outside the ground configurations with empty cavity.
    pub fn excited_population(&self, rho: &DensityMatrix) -> f64 {
        let ground: f64 = self.ground_indices.iter().map(|&i| rho.entries()[(i, i)].re).sum();
        (1.0 - ground).clamp(0.0, 1.0)
    }
}

/// Observables sampled on the requested grid.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub fidelity: ObservableSeries,
    /// One series per ground configuration.
    pub populations: Vec<ObservableSeries>,
    /// Zero throughout for effective systems.
    pub excited: ObservableSeries,
    pub final_state: DensityMatrix,
    pub stats: IntegrationStats,
}

impl Simulation {
    /// Time at which the fidelity becomes stationary.
    pub fn convergence_time(&self) -> Option<f64> {
        self.fidelity.stationary().map(|(_, t)| t)
    }

    pub fn final_fidelity(&self) -> f64 {
        self.fidelity.last().unwrap_or(0.0)
    }
}

struct Recorder<'a> {
    sys: &'a System,
    fidelity: ObservableSeries,
    populations: Vec<ObservableSeries>,
    excited: ObservableSeries,
    last: Option<DensityMatrix>,
    error: Option<ObservableError>,
    abort: &'a mut dyn FnMut() -> bool,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, rho: &DensityMatrix) -> Result<(), ObservableError> {
        self.fidelity.push(t, fidelity(rho, &self.sys.target)?)?;
        for (series, &i) in self.populations.iter_mut().zip(&self.sys.ground_indices) {
            series.push(t, rho.entries()[(i, i)].re)?;
        }
        self.excited.push(t, self.sys.excited_population(rho))
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, t: f64, rho: &DensityMatrix) {
        if self.error.is_none() {
            if let Err(e) = self.record(t, rho) {
                self.error = Some(e);
            }
        }
        self.last = Some(rho.clone());
    }

    fn abort(&mut self) -> bool {
        self.error.is_some() || (self.abort)()
    }
}

/// Human-readable one-line description.
pub fn describe(sys: &System) -> String {
    format!("{:?} system, dimension {}, {} collapse channels", sys.kind, sys.dim(), sys.collapse.len())
}
