//! Dormand-Prince 5(4) with the fourth-order continuous extension. The
//! generator is autonomous, so the stage times are not needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::hilbert::Operator;
use crate::linalg::{re, CMatrix, C64, ZERO};
use crate::model::SimParams;

use super::{DensityMatrix, DynamicsError, Lindblad, TRACE_FATAL, TRACE_RENORMALIZE};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Minimum number of trailing samples for stationarity.
pub const STATIONARY_WINDOW: usize = 50;
/// `|dF/dt|` below which a sample counts as stationary (units of `g`).
pub const STATIONARY_RATE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    pub dt_initial: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Disables error control and uses this step throughout.
    pub fixed_step: Option<f64>,
    /// Track the smallest eigenvalue of every recorded state (dense eigensolve per sample).
    pub check_positivity: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, dt_initial: 0.01, h_max: f64::INFINITY, max_steps: 50_000_000, fixed_step: None, check_positivity: false }
    }
}

impl IntegrateOptions {
    pub fn from_params(p: &SimParams) -> Self {
        Self { tol: p.tol, dt_initial: p.dt_initial, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub t_final: f64,
    /// Largest `|tr(rho) - 1|` seen before renormalization.
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue over recorded states, when tracked.
    pub min_eigenvalue: Option<f64>,
}

/// Receives the state at every grid time.
pub trait Observer {
    fn observe(&mut self, t: f64, rho: &DensityMatrix);

    /// Polled once per step; returning `true` stops with [`DynamicsError::Aborted`].
    fn abort(&mut self) -> bool {
        false
    }
}

impl<F: FnMut(f64, &DensityMatrix)> Observer for F {
    fn observe(&mut self, t: f64, rho: &DensityMatrix) {
        self(t, rho)
    }
}

/// Records on a strictly increasing time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<R> {
    pub times: Vec<f64>,
    pub records: Vec<R>,
    pub params: Option<SimParams>,
}

impl<R> Default for Trajectory<R> {
    fn default() -> Self {
        Self { times: Vec::new(), records: Vec::new(), params: None }
    }
}

impl<R> Trajectory<R> {
    pub fn new(params: Option<SimParams>) -> Self {
        Self { params, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Panics unless `t` is later than every recorded time.
    pub fn push(&mut self, t: f64, record: R) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "trajectory times must increase strictly");
        }
        self.times.push(t);
        self.records.push(record);
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &R)> {
        self.times.iter().copied().zip(&self.records)
    }

    pub fn map<S>(&self, mut f: impl FnMut(f64, &R) -> S) -> Trajectory<S> {
        Trajectory { times: self.times.clone(), records: self.iter().map(|(t, r)| f(t, r)).collect(), params: self.params }
    }

    pub fn last(&self) -> Option<(f64, &R)> {
        self.times.last().copied().zip(self.records.last())
    }
}

fn check_grid(t_grid: &[f64]) -> Result<(), DynamicsError> {
    if t_grid.is_empty() {
        return Err(DynamicsError::InvalidGrid("empty"));
    }
    if !t_grid.iter().all(|t| t.is_finite()) {
        return Err(DynamicsError::InvalidGrid("non-finite time"));
    }
    if t_grid[0] < 0.0 {
        return Err(DynamicsError::InvalidGrid("times must start at or after 0"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DynamicsError::InvalidGrid("times must increase strictly"));
    }
    Ok(())
}

/// `y + h * sum_k w_k k_k` into `out`, in one pass.
fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    let mut ws = [0.0; 6];
    let mut ks: [&[C64]; 6] = [&[]; 6];
    let mut m = 0;
    for &(w, k) in terms {
        if w != 0.0 {
            ws[m] = h * w;
            ks[m] = k;
            m += 1;
        }
    }
    let (ws, ks) = (&ws[..m], &ks[..m]);
    for (i, (o, &yi)) in out.iter_mut().zip(y).enumerate() {
        let mut acc = yi;
        for (w, k) in ws.iter().zip(ks) {
            acc += k[i] * *w;
        }
        *o = acc;
    }
}

/// Makes a row-major `d x d` buffer exactly Hermitian.
fn hermitize(y: &mut [C64], d: usize) {
    for i in 0..d {
        y[i * d + i].im = 0.0;
        for j in i + 1..d {
            let m = (y[i * d + j] + y[j * d + i].conj()) * 0.5;
            y[i * d + j] = m;
            y[j * d + i] = m.conj();
        }
    }
}

struct Recorder<'a> {
    gen: &'a Lindblad,
    opts: &'a IntegrateOptions,
    stats: IntegrationStats,
}

impl Recorder<'_> {
    fn emit(&mut self, t: f64, data: Vec<C64>, obs: &mut dyn Observer) -> Result<(), DynamicsError> {
        let d = self.gen.dim();
        let m = CMatrix::from_row_major(d, d, data);
        let mut rho = DensityMatrix::new_unchecked(self.gen.space().clone(), m)?;
        let tr = rho.trace();
        let drift = (tr - re(1.0)).norm();
        self.stats.max_trace_drift = self.stats.max_trace_drift.max(drift);
        if !(drift <= TRACE_FATAL) {
            return Err(DynamicsError::TraceDrift { t, drift });
        }
        if drift <= TRACE_RENORMALIZE {
            let s = re(1.0 / tr.re);
            rho.entries_mut().as_mut_slice().iter_mut().for_each(|z| *z *= s);
        }
        self.stats.max_hermiticity_error = self.stats.max_hermiticity_error.max(rho.hermiticity_error());
        if self.opts.check_positivity {
            let ev = rho.min_eigenvalue();
            self.stats.min_eigenvalue = Some(self.stats.min_eigenvalue.map_or(ev, |m| m.min(ev)));
        }
        obs.observe(t, &rho);
        Ok(())
    }
}

/// Integrates from `t = 0` and hands the state at each `t_grid` time to
/// `obs`. Between steps the state comes from the continuous extension.
pub fn integrate_with(
    gen: &Lindblad,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &IntegrateOptions,
    obs: &mut dyn Observer,
) -> Result<IntegrationStats, DynamicsError> {
    check_grid(t_grid)?;
    if **rho0.space() != **gen.space() {
        return Err(crate::hilbert::HilbertError::SpaceMismatch.into());
    }
    if !(opts.tol > 0.0) || !(opts.dt_initial > 0.0) || opts.fixed_step.is_some_and(|h| !(h > 0.0)) {
        return Err(DynamicsError::InvalidGrid("step size and tolerance must be positive"));
    }
    let d = gen.dim();
    let n = d * d;
    let mut rec = Recorder { gen, opts, stats: IntegrationStats::default() };

    let mut y = rho0.entries().as_slice().to_vec();
    hermitize(&mut y, d);
    let mut scratch = Vec::new();
    let mut k: [Vec<C64>; 7] = core::array::from_fn(|_| vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];

    let mut t = 0.0;
    let mut gi = 0;
    while gi < t_grid.len() && t_grid[gi] <= 0.0 {
        rec.emit(t_grid[gi], y.clone(), obs)?;
        gi += 1;
    }
    let t_last = *t_grid.last().unwrap();
    gen.apply_hermitian(&y, &mut k[0], &mut scratch);
    rec.stats.rhs_evals += 1;

    let mut h = opts.fixed_step.unwrap_or(opts.dt_initial).min(opts.h_max);
    let mut steps = 0usize;
    while gi < t_grid.len() {
        if obs.abort() {
            return Err(DynamicsError::Aborted(t));
        }
        if steps >= opts.max_steps {
            return Err(DynamicsError::MaxSteps(t));
        }
        steps += 1;
        h = h.min(opts.h_max).min(t_last - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(DynamicsError::StepUnderflow { t, h });
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
        combine(&mut tmp, &y, h, &[(A21, k1)]);
        gen.apply_hermitian(&tmp, k2, &mut scratch);
        combine(&mut tmp, &y, h, &[(A31, k1), (A32, k2)]);
        gen.apply_hermitian(&tmp, k3, &mut scratch);
        combine(&mut tmp, &y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        gen.apply_hermitian(&tmp, k4, &mut scratch);
        combine(&mut tmp, &y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        gen.apply_hermitian(&tmp, k5, &mut scratch);
        combine(&mut tmp, &y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        gen.apply_hermitian(&tmp, k6, &mut scratch);
        combine(&mut y_new, &y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        gen.apply_hermitian(&y_new, k7, &mut scratch);
        rec.stats.rhs_evals += 6;

        let err = if opts.fixed_step.is_some() {
            0.0
        } else {
            // Max norm: an RMS over d^2 entries lets single populations err by ~d tol.
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = opts.tol * (1.0 + libm::sqrt(y[i].norm_sqr().max(y_new[i].norm_sqr())));
                worst = worst.max(e.norm_sqr() / (sc * sc));
            }
            libm::sqrt(worst)
        };
        if !err.is_finite() {
            h *= MIN_FACTOR;
            rec.stats.rejected += 1;
            continue;
        }

        if err <= 1.0 {
            let t_new = t + h;
            // Continuous extension on (t, t + h].
            if gi < t_grid.len() && t_grid[gi] <= t_new {
                let mut r5 = vec![ZERO; n];
                for i in 0..n {
                    r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while gi < t_grid.len() && t_grid[gi] <= t_new {
                    let tg = t_grid[gi];
                    let data = if tg == t_new {
                        y_new.clone()
                    } else {
                        let th = (tg - t) / h;
                        let th1 = 1.0 - th;
                        (0..n)
                            .map(|i| {
                                let diff = y_new[i] - y[i];
                                let bspl = k1[i] * h - diff;
                                let r4 = diff - k7[i] * h - bspl;
                                y[i] + (diff + (bspl + (r4 + r5[i] * th1) * th) * th1) * th
                            })
                            .collect()
                    };
                    rec.emit(tg, data, obs)?;
                    gi += 1;
                }
            }
            t = t_new;
            core::mem::swap(&mut y, &mut y_new);
            hermitize(&mut y, d);
            core::mem::swap(k1, k7);
            rec.stats.accepted += 1;
            if opts.fixed_step.is_none() {
                let fac = if err == 0.0 { MAX_FACTOR } else { (SAFETY * libm::pow(err, -0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                h *= fac;
            }
        } else {
            rec.stats.rejected += 1;
            h *= (SAFETY * libm::pow(err, -0.2)).max(MIN_FACTOR);
        }
    }
    rec.stats.t_final = t;
    Ok(rec.stats)
}

/// Stores every recorded state. Memory grows as `len(t_grid) * d^2`.
pub fn integrate<O: AsRef<Operator>>(
    rho0: &DensityMatrix,
    h: &Operator,
    ls: &[O],
    t_grid: &[f64],
    tol: f64,
) -> Result<Trajectory<DensityMatrix>, DynamicsError> {
    let gen = Lindblad::new(h, ls)?;
    let mut traj = Trajectory::new(None);
    let opts = IntegrateOptions { tol, ..IntegrateOptions::default() };
    integrate_with(&gen, rho0, t_grid, &opts, &mut |t: f64, rho: &DensityMatrix| traj.push(t, rho.clone()))?;
    Ok(traj)
}

/// First sample index `s` after which the signal stays flat: every finite
/// difference `|dF/dt|` from `s` to the end is below `rate`, over at least
/// `window` trailing samples.
pub fn stationary_index(times: &[f64], values: &[f64], window: usize, rate: f64) -> Option<usize> {
    let n = times.len().min(values.len());
    if n < window.max(2) {
        return None;
    }
    let mut s = n - 1;
    while s > 0 {
        let slope = (values[s] - values[s - 1]) / (times[s] - times[s - 1]);
        if !(slope.abs() < rate) {
            break;
        }
        s -= 1;
    }
    (n - s >= window).then_some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Space, SpaceRef};
    use crate::linalg::{SparseMatrix, ONE};
    use alloc::sync::Arc;

    fn qubit() -> SpaceRef {
        Arc::new(Space::new([("q", 2)]).unwrap())
    }

    fn sigma_minus(s: &SpaceRef, amp: f64) -> Operator {
        Operator::new(s.clone(), SparseMatrix::from_triplets(2, 2, &[(0, 1, re(amp))])).unwrap()
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn constant_without_generator() {
        let s = qubit();
        let rho0 = DensityMatrix::pure(s.clone(), &[ONE, re(0.5)]).unwrap();
        let traj = integrate::<Operator>(&rho0, &Operator::zero(s), &[], &grid(10.0, 10), 1e-10).unwrap();
        assert_eq!(traj.len(), 11);
        for (_, r) in traj.iter() {
            assert!((r.entries() - rho0.entries()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn exponential_decay_oracle() {
        let s = qubit();
        let gamma: f64 = 0.37;
        let rho0 = DensityMatrix::basis_state(s.clone(), 1).unwrap();
        let traj = integrate(&rho0, &Operator::zero(s.clone()), &[sigma_minus(&s, gamma.sqrt())], &grid(20.0, 200), 1e-10).unwrap();
        for (t, r) in traj.iter() {
            assert!((r.entries()[(1, 1)].re - libm::exp(-gamma * t)).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn rabi_oracle() {
        let s = qubit();
        let omega = 0.8;
        let h = sigma_minus(&s, omega);
        let h = h.add(&h.adjoint()).unwrap();
        let rho0 = DensityMatrix::basis_state(s.clone(), 0).unwrap();
        let traj = integrate::<Operator>(&rho0, &h, &[], &grid(30.0, 300), 1e-10).unwrap();
        for (t, r) in traj.iter() {
            let expect = libm::sin(omega * t).powi(2);
            assert!((r.entries()[(1, 1)].re - expect).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn grid_is_validated() {
        let s = qubit();
        let rho0 = DensityMatrix::maximally_mixed(s.clone());
        let h = Operator::zero(s);
        assert!(integrate::<Operator>(&rho0, &h, &[], &[], 1e-8).is_err());
        assert!(integrate::<Operator>(&rho0, &h, &[], &[0.0, 1.0, 1.0], 1e-8).is_err());
        assert!(integrate::<Operator>(&rho0, &h, &[], &[-1.0, 1.0], 1e-8).is_err());
    }

    #[test]
    fn abort_is_honored() {
        struct Stop(usize);
        impl Observer for Stop {
            fn observe(&mut self, _: f64, _: &DensityMatrix) {}
            fn abort(&mut self) -> bool {
                self.0 += 1;
                self.0 > 3
            }
        }
        let s = qubit();
        let h = sigma_minus(&s, 1.0);
        let h = h.add(&h.adjoint()).unwrap();
        let gen = Lindblad::new::<Operator>(&h, &[]).unwrap();
        let rho0 = DensityMatrix::basis_state(s, 0).unwrap();
        let r = integrate_with(&gen, &rho0, &grid(100.0, 10), &IntegrateOptions::default(), &mut Stop(0));
        assert!(matches!(r, Err(DynamicsError::Aborted(_))));
    }

    /// Damped, driven qubit: error against the analytic-free reference run
    /// shrinks by at least 4x when the fixed step is halved.
    #[test]
    fn step_halving_order() {
        let s = qubit();
        let h = sigma_minus(&s, 0.6);
        let h = h.add(&h.adjoint()).unwrap();
        let gen = Lindblad::new(&h, &[sigma_minus(&s, 0.5)]).unwrap();
        let rho0 = DensityMatrix::basis_state(s, 0).unwrap();
        let run = |opts: IntegrateOptions| {
            let mut last = None;
            integrate_with(&gen, &rho0, &[5.0], &opts, &mut |_: f64, r: &DensityMatrix| last = Some(r.clone())).unwrap();
            last.unwrap()
        };
        let reference = run(IntegrateOptions { tol: 1e-13, ..IntegrateOptions::default() });
        let err = |h: f64| {
            let r = run(IntegrateOptions { fixed_step: Some(h), ..IntegrateOptions::default() });
            (r.entries() - reference.entries()).max_abs()
        };
        let (e1, e2) = (err(0.25), err(0.125));
        assert!(e1 / e2 >= 4.0, "{e1:e} / {e2:e}");
        // Adaptive control: a tenfold tighter tolerance also lowers the error.
        let adaptive = |tol: f64| (run(IntegrateOptions { tol, ..IntegrateOptions::default() }).entries() - reference.entries()).max_abs();
        assert!(adaptive(1e-7) < adaptive(1e-6));
    }

    #[test]
    fn trace_and_hermiticity_tracked() {
        let s = qubit();
        let h = sigma_minus(&s, 0.6);
        let h = h.add(&h.adjoint()).unwrap();
        let gen = Lindblad::new(&h, &[sigma_minus(&s, 0.5)]).unwrap();
        let rho0 = DensityMatrix::basis_state(s, 0).unwrap();
        let opts = IntegrateOptions { check_positivity: true, ..IntegrateOptions::default() };
        let stats = integrate_with(&gen, &rho0, &grid(50.0, 100), &opts, &mut |_: f64, _: &DensityMatrix| {}).unwrap();
        assert!(stats.max_trace_drift < 1e-12);
        assert!(stats.max_hermiticity_error < 1e-12);
        assert!(stats.min_eigenvalue.unwrap() > -1e-10);
        assert!(stats.accepted > 0 && stats.t_final == 50.0);
    }

    #[test]
    fn stationarity_detection() {
        let times: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let values: Vec<f64> = times.iter().map(|&t| if t < 100.0 { t * 1e-3 } else { 0.1 }).collect();
        assert_eq!(stationary_index(&times, &values, 50, 1e-6), Some(100));
        assert_eq!(stationary_index(&times, &values, 150, 1e-6), None);
        let ramp: Vec<f64> = times.iter().map(|&t| t * 1e-3).collect();
        assert_eq!(stationary_index(&times, &ramp, 50, 1e-6), None);
    }

    #[test]
    fn trajectory_push_requires_increasing_times() {
        let mut t = Trajectory::new(None);
        t.push(0.0, 1);
        t.push(1.0, 2);
        assert_eq!(t.last(), Some((1.0, &2)));
        let r = std::panic::catch_unwind(move || t.push(1.0, 3));
        assert!(r.is_err());
    }
}
