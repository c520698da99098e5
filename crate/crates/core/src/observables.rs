//! Fidelity `F = <psi| rho |psi>` (no square root) and state populations.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{stationary_index, DensityMatrix, STATIONARY_RATE, STATIONARY_WINDOW};
use crate::linalg::{CMatrix, C64};

const NORM_TOL: f64 = 1e-10;
/// Values outside `[0, 1]` by at most this much are clipped.
pub const CLIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error("state has length {got}, density matrix has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state `{0}` is not normalized")]
    NotNormalized(String),
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("series lengths differ")]
    LengthMismatch,
}

fn clip(x: f64) -> Result<f64, ObservableError> {
    if (-CLIP_TOL..=1.0 + CLIP_TOL).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(ObservableError::OutOfRange(x))
    }
}

/// Raw `<psi| m |psi>`, caller guarantees dimensions.
fn expectation(m: &CMatrix, psi: &[C64]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let row = m.row(i);
        let s: C64 = psi.iter().zip(row).filter(|(b, _)| b.re != 0.0 || b.im != 0.0).map(|(b, r)| r * b).sum();
        acc += a.conj() * s;
    }
    acc.re
}

fn check(rho: &DensityMatrix, label: &str, psi: &[C64]) -> Result<(), ObservableError> {
    if psi.len() != rho.dim() {
        return Err(ObservableError::DimensionMismatch { expected: rho.dim(), got: psi.len() });
    }
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(ObservableError::NotNormalized(label.into()));
    }
    Ok(())
}

/// `<psi| rho |psi>`.
pub fn fidelity(rho: &DensityMatrix, psi: &[C64]) -> Result<f64, ObservableError> {
    check(rho, "psi", psi)?;
    clip(expectation(rho.entries(), psi))
}

/// `<psi_i| rho |psi_i>` per labeled state.
pub fn populations(rho: &DensityMatrix, states: &[(String, Vec<C64>)]) -> Result<Vec<(String, f64)>, ObservableError> {
    states
        .iter()
        .map(|(label, psi)| {
            check(rho, label, psi)?;
            Ok((label.clone(), clip(expectation(rho.entries(), psi))?))
        })
        .collect()
}

/// `sum_{i in indices} rho_ii`: population of a set of basis states.
pub fn subspace_population(rho: &DensityMatrix, indices: &[usize]) -> Result<f64, ObservableError> {
    let d = rho.dim();
    if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
        return Err(ObservableError::DimensionMismatch { expected: d, got: bad });
    }
    clip(indices.iter().map(|&i| rho.entries()[(i, i)].re).sum())
}

/// One named quantity sampled over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), times: Vec::new(), values: Vec::new() }
    }

    pub fn from_parts(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self, ObservableError> {
        if times.len() != values.len() {
            return Err(ObservableError::LengthMismatch);
        }
        let values = values.into_iter().map(clip).collect::<Result<_, _>>()?;
        Ok(Self { name: name.into(), times, values })
    }

    pub fn push(&mut self, t: f64, v: f64) -> Result<(), ObservableError> {
        self.values.push(clip(v)?);
        self.times.push(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn max_abs_difference(&self, other: &Self) -> Result<f64, ObservableError> {
        if self.len() != other.len() {
            return Err(ObservableError::LengthMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Index and time from which `|dF/dt| < 1e-6 g` holds to the end of the
    /// series over at least 50 trailing samples.
    pub fn stationary(&self) -> Option<(usize, f64)> {
        stationary_index(&self.times, &self.values, STATIONARY_WINDOW, STATIONARY_RATE).map(|i| (i, self.times[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Space, SpaceRef};
    use crate::linalg::{re, sqrt, ONE, ZERO};
    use alloc::string::ToString;
    use alloc::sync::Arc;
    use alloc::vec;
    use proptest::prelude::*;

    fn space9() -> SpaceRef {
        Arc::new(Space::new([("atom1", 3), ("atom2", 3)]).unwrap())
    }

    fn t1() -> Vec<C64> {
        // (|gL gR> + |gR gL> + |ga g0>) / sqrt 3 on (gL, gR, ga) x (gL, g0, gR).
        let mut v = vec![ZERO; 9];
        let s = re(1.0 / sqrt(3.0));
        v[2] = s;
        v[3] = s;
        v[7] = s;
        v
    }

    fn t2() -> Vec<C64> {
        let mut v = vec![ZERO; 9];
        let s = 1.0 / sqrt(6.0);
        v[2] = re(s);
        v[3] = re(s);
        v[7] = re(-2.0 * s);
        v
    }

    #[test]
    fn pure_mixed_orthogonal() {
        let s = space9();
        let rho = DensityMatrix::pure(s.clone(), &t1()).unwrap();
        assert!((fidelity(&rho, &t1()).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&rho, &t2()).unwrap() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(s);
        assert!((fidelity(&mixed, &t1()).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let rho = DensityMatrix::maximally_mixed(space9());
        assert!(matches!(fidelity(&rho, &[ONE]), Err(ObservableError::DimensionMismatch { .. })));
        let unnormalized = vec![ONE; 9];
        assert!(matches!(fidelity(&rho, &unnormalized), Err(ObservableError::NotNormalized(_))));
        assert!(subspace_population(&rho, &[9]).is_err());
        assert!(ObservableSeries::from_parts("x", vec![0.0], vec![]).is_err());
        assert!(ObservableSeries::new("x").push(0.0, 1.1).is_err());
    }

    #[test]
    fn basis_populations_sum_to_one() {
        let s = space9();
        let rho = DensityMatrix::pure(s.clone(), &t1()).unwrap();
        let basis: Vec<_> = (0..9).map(|k| (k.to_string(), s.basis_vector(&s.multi_index(k)))).collect();
        let pops = populations(&rho, &basis).unwrap();
        assert!((pops.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let ga_gl = DensityMatrix::basis_state(s, 6).unwrap();
        assert_eq!(populations(&ga_gl, &basis).unwrap()[6].1, 1.0);
        assert_eq!(subspace_population(&ga_gl, &[6, 7]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn fidelity_is_linear_and_matches_populations(a in 0.0f64..1.0, k in 0usize..9) {
            let s = space9();
            let r1 = DensityMatrix::pure(s.clone(), &t1()).unwrap();
            let r2 = DensityMatrix::basis_state(s.clone(), k).unwrap();
            let mix = &r1.entries().scale(re(a)) + &r2.entries().scale(re(1.0 - a));
            let rho = DensityMatrix::new(s, mix).unwrap();
            let f = fidelity(&rho, &t1()).unwrap();
            let lin = a * fidelity(&r1, &t1()).unwrap() + (1.0 - a) * fidelity(&r2, &t1()).unwrap();
            prop_assert!((f - lin).abs() < 1e-14);
            let p = populations(&rho, &[("T1".into(), t1())]).unwrap();
            prop_assert_eq!(p[0].1, f);
        }
    }
}
