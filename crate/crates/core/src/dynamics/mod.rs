//! Lindblad evolution `rho' = i[rho, H] + sum_j (L rho L^dagger - {L^dagger L, rho}/2)`,
//! its vectorized generator, adaptive integration and steady states.

mod generator;
mod integrate;
mod state;
mod steady;

use crate::hilbert::HilbertError;

pub use generator::{decay_operator, liouvillian_matrix, lindblad_rhs, Lindblad};
pub use integrate::{
    integrate, integrate_with, stationary_index, IntegrateOptions, IntegrationStats, Observer, Trajectory,
    STATIONARY_RATE, STATIONARY_WINDOW,
};
pub use state::{DensityMatrix, StateDiagnostics};
pub use steady::{slowest_rate, steady_state, steady_state_abortable, steady_state_with, SteadyMethod, SteadyStateOptions, SteadyStateReport};

/// Trace drift up to which a recorded state is silently renormalized.
pub const TRACE_RENORMALIZE: f64 = 1e-8;
/// Trace drift treated as a numerical instability.
pub const TRACE_FATAL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("no operators supplied")]
    NoOperators,
    #[error("state is not a density matrix: {0}")]
    InvalidState(&'static str),
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {0}")]
    MaxSteps(f64),
    #[error("trace drifted by {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("integration aborted at t = {0}")]
    Aborted(f64),
    #[error("steady state requires at least one nonzero collapse operator")]
    NoDissipation,
    #[error("steady state is not unique (null space dimension {0:?})")]
    DegenerateSteadyState(Option<usize>),
    #[error("steady state residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
    #[error("steady state not reached by t = {0}")]
    NotConverged(f64),
}
