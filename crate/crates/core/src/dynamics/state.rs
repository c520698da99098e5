use alloc::vec::Vec;

use crate::hilbert::{HilbertError, Operator, SpaceRef};
use crate::linalg::{CMatrix, C64, ONE};

use super::DynamicsError;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = -1e-8;

/// Measured deviations from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    /// Largest `|rho_ij - conj(rho_ji)|` relative to the largest entry.
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn check(&self) -> Result<(), DynamicsError> {
        if !(self.hermiticity_error <= HERMITICITY_TOL) {
            return Err(DynamicsError::InvalidState("not Hermitian"));
        }
        if !(self.trace_error <= TRACE_TOL) {
            return Err(DynamicsError::InvalidState("trace is not one"));
        }
        if !(self.min_eigenvalue >= POSITIVITY_TOL) {
            return Err(DynamicsError::InvalidState("negative eigenvalue"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: SpaceRef,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validated constructor.
    pub fn new(space: SpaceRef, entries: CMatrix) -> Result<Self, DynamicsError> {
        let rho = Self::new_unchecked(space, entries)?;
        rho.diagnostics().check()?;
        Ok(rho)
    }

    /// Checks only the shape.
    pub fn new_unchecked(space: SpaceRef, entries: CMatrix) -> Result<Self, DynamicsError> {
        let d = space.total_dim();
        if entries.rows() != d || entries.cols() != d {
            return Err(HilbertError::DimensionMismatch { expected: d, got: entries.rows() }.into());
        }
        Ok(Self { space, entries })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(space: SpaceRef, psi: &[C64]) -> Result<Self, DynamicsError> {
        let d = space.total_dim();
        if psi.len() != d {
            return Err(HilbertError::DimensionMismatch { expected: d, got: psi.len() }.into());
        }
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(n > 0.0) {
            return Err(DynamicsError::InvalidState("zero vector"));
        }
        Ok(Self { space, entries: CMatrix::outer(psi, psi).scale(C64::new(1.0 / n, 0.0)) })
    }

    pub fn basis_state(space: SpaceRef, index: usize) -> Result<Self, DynamicsError> {
        let d = space.total_dim();
        if index >= d {
            return Err(HilbertError::DimensionMismatch { expected: d, got: index }.into());
        }
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = ONE;
        Ok(Self { space, entries: m })
    }

    pub fn maximally_mixed(space: SpaceRef) -> Self {
        let d = space.total_dim();
        Self { entries: CMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0)), space }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Diagonal in the flat basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `tr(rho O)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64, DynamicsError> {
        if **op.space() != *self.space {
            return Err(HilbertError::SpaceMismatch.into());
        }
        Ok(op.matrix().iter().map(|(i, j, v)| v * self.entries[(j, i)]).sum())
    }

    /// `0.5 * sum |eig(rho - sigma)|`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64, DynamicsError> {
        if *self.space != *other.space {
            return Err(HilbertError::SpaceMismatch.into());
        }
        let diff = &self.entries - &other.entries;
        Ok(0.5 * diff.hermitian_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.entries.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.entries.hermiticity_error() / scale
        }
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - ONE).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.hermitian_eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// All three invariant measurements (includes a dense eigensolve).
    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics {
            trace_error: self.trace_error(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.diagnostics().check()
    }

    /// Hermitian part divided by its trace.
    pub fn symmetrized(&self) -> Self {
        let h = self.entries.hermitian_part();
        let tr = h.trace().re;
        Self { space: self.space.clone(), entries: h.scale(C64::new(1.0 / tr, 0.0)) }
    }

    pub(crate) fn entries_mut(&mut self) -> &mut CMatrix {
        &mut self.entries
    }
}
