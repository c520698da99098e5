use serde::{Deserialize, Serialize};

use crate::linalg::{c, C64};

use super::ModelError;

/// Physical parameters (in units of `g`, time in `1/g`) and numerical
/// controls for one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    /// Atom-cavity coupling, identical for both modes.
    pub g: f64,
    /// Optical laser Rabi frequency (both atoms).
    #[serde(rename = "Omega")]
    pub rabi: f64,
    /// Microwave Rabi frequency; atom 2 is driven with the opposite sign.
    #[serde(rename = "omega")]
    pub microwave: f64,
    /// Laser detuning from the excited levels.
    #[serde(rename = "Delta")]
    pub detuning: f64,
    /// Cavity two-photon detuning; `g^2 / Delta` when absent.
    #[serde(rename = "delta", default, skip_serializing_if = "Option::is_none")]
    pub cavity_detuning: Option<f64>,
    /// Full atomic linewidth.
    pub gamma: f64,
    /// Cavity field decay rate, identical for all modes.
    #[serde(default)]
    pub kappa: f64,
    /// Fock truncation per cavity mode.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt_initial: f64,
    /// Relative local error tolerance of the integrator.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_n_max() -> usize {
    1
}
fn default_t_end() -> f64 {
    10_000.0
}
fn default_dt() -> f64 {
    0.01
}
fn default_tol() -> f64 {
    1e-10
}

impl Default for SimParams {
    /// `Omega = 0.02 g`, `omega = 0.1 Omega`, `Delta = g`, `gamma = 0.1 g`,
    /// `kappa = 0`.
    fn default() -> Self {
        Self {
            g: 1.0,
            rabi: 0.02,
            microwave: 0.002,
            detuning: 1.0,
            cavity_detuning: None,
            gamma: 0.1,
            kappa: 0.0,
            n_max: default_n_max(),
            t_end: default_t_end(),
            dt_initial: default_dt(),
            tol: default_tol(),
        }
    }
}

impl SimParams {
    /// Cavity detuning actually used.
    pub fn delta(&self) -> f64 {
        self.cavity_detuning.unwrap_or(self.g * self.g / self.detuning)
    }

    /// `Delta' = Delta - i gamma / 2`.
    pub fn delta_prime(&self) -> C64 {
        c(self.detuning, -0.5 * self.gamma)
    }

    /// `g_eff = g Omega / Delta`.
    pub fn g_eff(&self) -> f64 {
        self.g * self.rabi / self.detuning
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [self.g, self.rabi, self.microwave, self.detuning, self.gamma, self.kappa, self.t_end, self.dt_initial, self.tol]
            .iter()
            .all(|x| x.is_finite())
            && self.cavity_detuning.map_or(true, f64::is_finite);
        if !finite {
            return Err(ModelError::InvalidParams("parameters must be finite"));
        }
        if self.g <= 0.0 {
            return Err(ModelError::InvalidParams("g must be positive"));
        }
        if self.gamma < 0.0 || self.kappa < 0.0 {
            return Err(ModelError::InvalidParams("rates must be non-negative"));
        }
        if self.cavity_detuning.is_none() && self.detuning == 0.0 {
            return Err(ModelError::InvalidParams("Delta = 0 needs an explicit delta"));
        }
        if self.t_end < 0.0 || self.dt_initial <= 0.0 || self.tol <= 0.0 {
            return Err(ModelError::InvalidParams("numerical controls must be positive"));
        }
        Ok(())
    }
}
