use alloc::vec::Vec;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::hilbert::Operator;
use crate::linalg::{CMatrix, C64, ONE};

use super::generator::{unvectorize, vectorize};
use super::{integrate_with, DensityMatrix, DynamicsError, IntegrateOptions, Lindblad, Observer};

/// Largest `d^2` for which a degenerate system is diagnosed by a dense SVD.
const SVD_DIAGNOSIS_MAX: usize = 1600;
/// Relative singular value below which a direction counts as null.
const NULL_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    SparseLu,
    Integration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateOptions {
    /// Sparse LU is used for `d <= lu_max_dim`, time integration above.
    pub lu_max_dim: usize,
    /// Residual bound relative to the Frobenius norm of the Liouvillian (LU path).
    pub residual_rel: f64,
    /// Integration path: stop once `||L(rho)||_F` drops below this. The
    /// adaptive stepper leaves a residual floor of roughly the integration
    /// tolerance, so this must stay above `integrate.tol`.
    pub rhs_tol: f64,
    /// Integration path: check interval and give-up time.
    pub chunk: f64,
    pub t_max: f64,
    pub integrate: IntegrateOptions,
    /// Integration path starting state; maximally mixed when absent.
    pub initial: Option<DensityMatrix>,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            lu_max_dim: 100,
            residual_rel: 1e-10,
            rhs_tol: 1e-9,
            chunk: 500.0,
            t_max: 2e6,
            integrate: IntegrateOptions { tol: 1e-11, ..IntegrateOptions::default() },
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub state: DensityMatrix,
    pub method: SteadyMethod,
    /// `||L vec(rho)||_2` (LU path) or `||L(rho)||_F` (integration path).
    pub residual: f64,
    /// Integration path: time at which the residual criterion was met.
    pub time: Option<f64>,
}

/// Unique steady state with default options.
pub fn steady_state<O: AsRef<Operator>>(h: &Operator, ls: &[O]) -> Result<DensityMatrix, DynamicsError> {
    let gen = Lindblad::new(h, ls)?;
    Ok(steady_state_with(&gen, &SteadyStateOptions::default())?.state)
}

pub fn steady_state_with(gen: &Lindblad, opts: &SteadyStateOptions) -> Result<SteadyStateReport, DynamicsError> {
    steady_state_abortable(gen, opts, &mut || false)
}

/// As [`steady_state_with`]; `abort` is polled before the LU solve and once
/// per integrator step on the integration path.
pub fn steady_state_abortable(gen: &Lindblad, opts: &SteadyStateOptions, abort: &mut dyn FnMut() -> bool) -> Result<SteadyStateReport, DynamicsError> {
    if !gen.has_dissipation() {
        return Err(DynamicsError::NoDissipation);
    }
    if gen.dim() <= opts.lu_max_dim {
        if abort() {
            return Err(DynamicsError::Aborted(0.0));
        }
        by_lu(gen, opts)
    } else {
        by_integration(gen, opts, abort)
    }
}

struct LastState<'a> {
    state: Option<DensityMatrix>,
    abort: &'a mut dyn FnMut() -> bool,
}

impl Observer for LastState<'_> {
    fn observe(&mut self, _: f64, rho: &DensityMatrix) {
        self.state = Some(rho.clone());
    }

    fn abort(&mut self) -> bool {
        (self.abort)()
    }
}

fn finish(gen: &Lindblad, m: CMatrix) -> Result<DensityMatrix, DynamicsError> {
    let rho = DensityMatrix::new_unchecked(gen.space().clone(), m)?.symmetrized();
    if !(rho.min_eigenvalue() >= -1e-8) {
        return Err(DynamicsError::InvalidState("steady state is not positive"));
    }
    rho.validate()?;
    Ok(rho)
}

fn null_dimension(sup: &crate::linalg::SparseMatrix) -> Option<usize> {
    if sup.rows() > SVD_DIAGNOSIS_MAX {
        return None;
    }
    let s = sup.to_dense().singular_values();
    let top = s.first().copied().unwrap_or(0.0);
    Some(s.iter().filter(|&&x| x <= NULL_REL_TOL * top).count())
}

/// Replaces the `rho_00` equation by `tr(rho) = 1` and solves.
fn by_lu(gen: &Lindblad, opts: &SteadyStateOptions) -> Result<SteadyStateReport, DynamicsError> {
    let d = gen.dim();
    let n = d * d;
    let sup = gen.liouvillian();
    let mut trips: Vec<Triplet<usize, usize, C64>> =
        sup.iter().filter(|&(i, _, _)| i != 0).map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    trips.extend((0..d).map(|k| Triplet::new(0, k + d * k, ONE)));

    let degenerate = || DynamicsError::DegenerateSteadyState(null_dimension(&sup));
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trips).map_err(|_| degenerate())?;
    let lu = a.sp_lu().map_err(|_| degenerate())?;
    let mut rhs = Mat::<C64>::zeros(n, 1);
    rhs[(0, 0)] = ONE;
    let x = lu.solve(&rhs);
    let v: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(degenerate());
    }

    let rho = finish(gen, unvectorize(&v, d)).map_err(|e| match null_dimension(&sup) {
        Some(k) if k > 1 => DynamicsError::DegenerateSteadyState(Some(k)),
        _ => e,
    })?;
    let residual = crate::linalg::vec_norm(&sup.matvec(&vectorize(rho.entries())));
    let limit = opts.residual_rel * sup.frobenius_norm();
    if !(residual <= limit) {
        return Err(match null_dimension(&sup) {
            Some(k) if k > 1 => DynamicsError::DegenerateSteadyState(Some(k)),
            _ => DynamicsError::Residual { residual, limit },
        });
    }
    Ok(SteadyStateReport { state: rho, method: SteadyMethod::SparseLu, residual, time: None })
}

fn by_integration(gen: &Lindblad, opts: &SteadyStateOptions, abort: &mut dyn FnMut() -> bool) -> Result<SteadyStateReport, DynamicsError> {
    let mut rho = match &opts.initial {
        Some(r) => r.clone(),
        None => DensityMatrix::maximally_mixed(gen.space().clone()),
    };
    let mut t = 0.0;
    loop {
        let res = gen.rhs(&rho)?.frobenius_norm();
        if res <= opts.rhs_tol {
            let state = finish(gen, rho.into_entries())?;
            return Ok(SteadyStateReport { state, method: SteadyMethod::Integration, residual: res, time: Some(t) });
        }
        if t >= opts.t_max {
            return Err(DynamicsError::NotConverged(t));
        }
        let mut last = LastState { state: None, abort: &mut *abort };
        integrate_with(gen, &rho, &[opts.chunk], &opts.integrate, &mut last).map_err(|e| match e {
            DynamicsError::Aborted(dt) => DynamicsError::Aborted(t + dt),
            e => e,
        })?;
        rho = last.state.expect("one grid point");
        t += opts.chunk;
    }
}

/// Smallest nonzero `|Re lambda|` of the Liouvillian (dense; small systems only).
pub fn slowest_rate(gen: &Lindblad) -> f64 {
    let ev = gen.liouvillian().to_dense().eigenvalues();
    let top = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    ev.iter().map(|z| -z.re).filter(|&r| r > NULL_REL_TOL * top).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Space, SpaceRef};
    use crate::linalg::{re, SparseMatrix};
    use alloc::sync::Arc;

struct Last(Option<DensityMatrix>);
    
    impl Observer for Last {
        fn observe(&mut self, _: f64, rho: &DensityMatrix) {
            self.0 = Some(rho.clone());
        }
    }

    fn qubit() -> SpaceRef {
        Arc::new(Space::new([("q", 2)]).unwrap())
    }

    fn sigma_minus(s: &SpaceRef, amp: f64) -> Operator {
        Operator::new(s.clone(), SparseMatrix::from_triplets(2, 2, &[(0, 1, re(amp))])).unwrap()
    }

    #[test]
    fn pure_decay_relaxes_to_ground() {
        let s = qubit();
        let rho = steady_state(&Operator::zero(s.clone()), &[sigma_minus(&s, 0.4)]).unwrap();
        assert!((rho.entries()[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn requires_dissipation() {
        let s = qubit();
        assert_eq!(steady_state::<Operator>(&Operator::zero(s), &[]), Err(DynamicsError::NoDissipation));
    }

    #[test]
    fn degenerate_null_space_is_reported() {
        // Two decoupled qubits, only the first decays: the second keeps any state.
        let s: SpaceRef = Arc::new(Space::new([("a", 2), ("b", 2)]).unwrap());
        let l = crate::hilbert::embed(&sigma_minus(&qubit(), 1.0).to_dense(), "a", &s).unwrap();
        let r = steady_state(&Operator::zero(s), &[l]);
        assert!(matches!(r, Err(DynamicsError::DegenerateSteadyState(Some(k))) if k == 4), "{r:?}");
    }

    #[test]
    fn driven_qubit_matches_closed_form() {
        // Resonant drive H = W(s+ + s-), decay gamma: rho_ee = 4W^2 / (gamma^2 + 8W^2).
        let s = qubit();
        let (w, gamma): (f64, f64) = (0.3, 0.5);
        let h = sigma_minus(&s, w);
        let h = h.add(&h.adjoint()).unwrap();
        let rho = steady_state(&h, &[sigma_minus(&s, gamma.sqrt())]).unwrap();
        let expect = 4.0 * w * w / (gamma * gamma + 8.0 * w * w);
        assert!((rho.entries()[(1, 1)].re - expect).abs() < 1e-12);
    }

    #[test]
    fn lu_and_integration_agree() {
        let s = qubit();
        let h = sigma_minus(&s, 0.3);
        let h = h.add(&h.adjoint()).unwrap().add(&Operator::new(s.clone(), SparseMatrix::from_triplets(2, 2, &[(1, 1, re(0.2))])).unwrap()).unwrap();
        let gen = Lindblad::new(&h, &[sigma_minus(&s, 0.5)]).unwrap();
        let lu = steady_state_with(&gen, &SteadyStateOptions::default()).unwrap();
        assert_eq!(lu.method, SteadyMethod::SparseLu);

        // Plain time evolution for many relaxation times.
        let t_end = 25.0 / slowest_rate(&gen);
        let mut last = Last(None);
        let opts = IntegrateOptions { tol: 1e-12, ..IntegrateOptions::default() };
        integrate_with(&gen, &DensityMatrix::basis_state(s.clone(), 0).unwrap(), &[t_end], &opts, &mut last).unwrap();
        assert!(lu.state.trace_distance(&last.0.unwrap()).unwrap() <= 1e-8);

        let via_int = steady_state_with(&gen, &SteadyStateOptions {
            lu_max_dim: 0,
            chunk: 10.0,
            rhs_tol: 1e-10,
            integrate: IntegrateOptions { tol: 1e-12, ..IntegrateOptions::default() },
            ..SteadyStateOptions::default()
        }).unwrap();
        assert_eq!(via_int.method, SteadyMethod::Integration);
        assert!(lu.state.trace_distance(&via_int.state).unwrap() <= 1e-8);
    }
}
