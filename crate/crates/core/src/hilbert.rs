//! Truncated tensor-product Hilbert spaces and operators on them.
//!
//! Factor order is fixed: atom 1, atom 2, then one Fock factor per cavity
//! mode in declared order. Flat indices are row-major over that order, so
//! the last mode varies fastest.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, SparseMatrix, C64};
use crate::model::LevelScheme;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HilbertError {
    #[error("space has no factors")]
    EmptySpace,
    #[error("factor `{0}` has dimension zero")]
    ZeroDimension(String),
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operators act on different spaces")]
    SpaceMismatch,
    #[error("invalid level scheme: {0}")]
    InvalidScheme(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor factors plus the flat/multi index arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    total: usize,
}

impl Space {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self, HilbertError> {
        let factors: Vec<Factor> =
            factors.into_iter().map(|(label, dim)| Factor { label: label.into(), dim }).collect();
        if factors.is_empty() {
            return Err(HilbertError::EmptySpace);
        }
        for (k, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(HilbertError::ZeroDimension(f.label.clone()));
            }
            if factors[..k].iter().any(|g| g.label == f.label) {
                return Err(HilbertError::DuplicateLabel(f.label.clone()));
            }
        }
        let mut strides = alloc::vec![1usize; factors.len()];
        for k in (0..factors.len() - 1).rev() {
            strides[k] = strides[k + 1] * factors[k + 1].dim;
        }
        let total = strides[0] * factors[0].dim;
        Ok(Self { factors, strides, total })
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn slot(&self, label: &str) -> Result<usize, HilbertError> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| HilbertError::UnknownSubsystem(label.to_string()))
    }

    pub fn local_dim(&self, label: &str) -> Result<usize, HilbertError> {
        Ok(self.factors[self.slot(label)?].dim)
    }

    pub fn stride(&self, slot: usize) -> usize {
        self.strides[slot]
    }

    /// Panics if the multi-index has the wrong length or is out of range.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        assert_eq!(multi.len(), self.factors.len(), "multi-index length");
        multi
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&m, f), &s)| {
                assert!(m < f.dim, "index {m} out of range for factor `{}`", f.label);
                m * s
            })
            .sum()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        assert!(flat < self.total, "flat index out of range");
        self.factors.iter().zip(&self.strides).map(|(f, &s)| (flat / s) % f.dim).collect()
    }

    /// Computational basis vector for a multi-index.
    pub fn basis_vector(&self, multi: &[usize]) -> Vec<C64> {
        let mut v = alloc::vec![crate::linalg::ZERO; self.total];
        v[self.flat_index(multi)] = crate::linalg::ONE;
        v
    }
}

pub type SpaceRef = Arc<Space>;

fn same_space(a: &SpaceRef, b: &SpaceRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A sparse matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: SpaceRef,
    matrix: SparseMatrix,
}

impl Operator {
    pub fn new(space: SpaceRef, matrix: SparseMatrix) -> Result<Self, HilbertError> {
        let d = space.total_dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(HilbertError::DimensionMismatch { expected: d, got: matrix.rows().max(matrix.cols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn zero(space: SpaceRef) -> Self {
        let d = space.total_dim();
        Self { space, matrix: SparseMatrix::zeros(d, d) }
    }

    pub fn identity(space: SpaceRef) -> Self {
        let d = space.total_dim();
        Self { space, matrix: SparseMatrix::identity(d) }
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn to_dense(&self) -> CMatrix {
        self.matrix.to_dense()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.scale(s) }
    }

    fn check(&self, other: &Self) -> Result<(), HilbertError> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(HilbertError::SpaceMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check(other)?;
        Ok(Self { space: self.space.clone(), matrix: self.matrix.add(&other.matrix) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check(other)?;
        Ok(Self { space: self.space.clone(), matrix: self.matrix.sub(&other.matrix) })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, HilbertError> {
        self.check(other)?;
        Ok(Self { space: self.space.clone(), matrix: self.matrix.matmul(&other.matrix) })
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>, HilbertError> {
        if v.len() != self.dim() {
            return Err(HilbertError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(self.matrix.matvec(v))
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.matrix.hermiticity_error()
    }
}

impl AsRef<Operator> for Operator {
    fn as_ref(&self) -> &Operator {
        self
    }
}

/// Sum of operators on one space. Empty input yields `None`.
pub fn sum_operators<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Result<Option<Operator>, HilbertError> {
    let mut acc: Option<Operator> = None;
    for op in ops {
        acc = Some(match acc {
            None => op.clone(),
            Some(a) => a.add(op)?,
        });
    }
    Ok(acc)
}

/// `a|n> = sqrt(n) |n-1>` on Fock states `0..=n_max`.
pub fn annihilation(n_max: usize) -> CMatrix {
    CMatrix::from_fn(n_max + 1, n_max + 1, |i, j| {
        if j == i + 1 {
            crate::linalg::re(crate::linalg::sqrt(j as f64))
        } else {
            crate::linalg::ZERO
        }
    })
}

/// `I (x) ... (x) local (x) ... (x) I` with `local` at the slot named `label`.
pub fn embed(local: &CMatrix, label: &str, space: &SpaceRef) -> Result<Operator, HilbertError> {
    let slot = space.slot(label)?;
    let dim = space.factors()[slot].dim;
    if local.rows() != dim || local.cols() != dim {
        return Err(HilbertError::DimensionMismatch { expected: dim, got: local.rows().max(local.cols()) });
    }
    let before: usize = space.factors()[..slot].iter().map(|f| f.dim).product();
    let after = space.stride(slot);
    let d = space.total_dim();

    let mut trips = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            let v = local[(a, b)];
            if v == crate::linalg::ZERO {
                continue;
            }
            for hi in 0..before {
                let base = hi * dim * after;
                for lo in 0..after {
                    trips.push((base + a * after + lo, base + b * after + lo, v));
                }
            }
        }
    }
    Operator::new(space.clone(), SparseMatrix::from_triplets(d, d, &trips))
}

/// Space for a level scheme: both atoms (all levels), then one Fock factor
/// of dimension `n_max + 1` per cavity mode.
pub fn build_space(scheme: &LevelScheme, n_max: usize) -> Result<SpaceRef, HilbertError> {
    scheme.validate().map_err(|e| HilbertError::InvalidScheme(e.to_string()))?;
    let mut factors: Vec<(String, usize)> =
        scheme.atoms.iter().map(|a| (a.label.clone(), a.level_count())).collect();
    factors.extend(scheme.cavity_modes.iter().map(|m| (m.clone(), n_max + 1)));
    Ok(Arc::new(Space::new(factors)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};
    use crate::model::presets;
    use proptest::prelude::*;

    fn two_by_three() -> SpaceRef {
        Arc::new(Space::new([("a", 2), ("b", 3)]).unwrap())
    }

    #[test]
    fn paper_3d_space_dimensions() {
        let scheme = presets::paper_3d_scheme();
        assert_eq!(build_space(&scheme, 1).unwrap().total_dim(), 80);
        assert_eq!(build_space(&scheme, 0).unwrap().total_dim(), 20);
        assert_eq!(build_space(&scheme, 2).unwrap().total_dim(), 180);
    }

    #[test]
    fn ndim_space_dimension_matches_hand_count() {
        // N=4: atom 1 has g_a, g1..g3, e0 (5); atom 2 has g_a, g1..g3, e1..e3 (7);
        // three modes of dimension 2.
        let scheme = presets::ndim_scheme(4).unwrap();
        assert_eq!(build_space(&scheme, 1).unwrap().total_dim(), 5 * 7 * 8);
    }

    #[test]
    fn factor_order_is_atoms_then_modes() {
        let space = build_space(&presets::paper_3d_scheme(), 1).unwrap();
        let labels: Vec<_> = space.factors().iter().map(|f| f.label.as_str()).collect();
        assert_eq!(labels, ["atom1", "atom2", "aL", "aR"]);
    }

    #[test]
    fn rejects_bad_factors() {
        assert_eq!(Space::new::<&str>([]), Err(HilbertError::EmptySpace));
        assert!(matches!(Space::new([("a", 2), ("a", 2)]), Err(HilbertError::DuplicateLabel(_))));
        assert!(matches!(Space::new([("a", 0)]), Err(HilbertError::ZeroDimension(_))));
    }

    #[test]
    fn annihilation_definition() {
        let a = annihilation(2);
        let one = [ZERO, ONE, ZERO];
        assert_eq!(a.matvec(&one), [ONE, ZERO, ZERO]);
        let vac = [ONE, ZERO, ZERO];
        assert!(a.matvec(&vac).iter().all(|z| *z == ZERO));
        let n = &a.adjoint() * &a;
        let two = [ZERO, ZERO, ONE];
        let out = n.matvec(&two);
        assert!((out[2] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn embed_identity_is_identity() {
        let space = two_by_three();
        let op = embed(&CMatrix::identity(3), "b", &space).unwrap();
        assert_eq!(op, Operator::identity(space));
    }

    #[test]
    fn embed_errors() {
        let space = two_by_three();
        assert!(matches!(embed(&CMatrix::identity(2), "c", &space), Err(HilbertError::UnknownSubsystem(_))));
        assert!(matches!(embed(&CMatrix::identity(2), "b", &space), Err(HilbertError::DimensionMismatch { .. })));
    }

    #[test]
    fn embedded_lowering_has_twenty_entries() {
        let scheme = presets::paper_3d_scheme();
        let space = build_space(&scheme, 1).unwrap();
        let atom = &scheme.atoms[0];
        let mut local = CMatrix::zeros(4, 4);
        local[(atom.level_index("gL").unwrap(), atom.level_index("e0").unwrap())] = ONE;
        let op = embed(&local, "atom1", &space).unwrap();
        // Brute force: count pairs of basis states connected by the operator.
        let mut count = 0;
        for i in 0..space.total_dim() {
            for j in 0..space.total_dim() {
                let (mi, mj) = (space.multi_index(i), space.multi_index(j));
                if mi[0] == 0 && mj[0] == 3 && mi[1..] == mj[1..] {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 20);
        assert_eq!(op.matrix().nnz(), count);
    }

    #[test]
    fn operator_arithmetic_requires_same_space() {
        let a = Operator::identity(two_by_three());
        let b = Operator::identity(Arc::new(Space::new([("x", 6)]).unwrap()));
        assert_eq!(a.add(&b), Err(HilbertError::SpaceMismatch));
        assert_eq!(a.mul(&b), Err(HilbertError::SpaceMismatch));
    }

    fn arb_local(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
    }

    proptest! {
        #[test]
        fn index_map_round_trips(dims in proptest::collection::vec(1usize..5, 1..5)) {
            let space = Space::new(dims.iter().enumerate().map(|(k, &d)| (alloc::format!("f{k}"), d))).unwrap();
            prop_assert_eq!(space.total_dim(), dims.iter().product::<usize>());
            for flat in 0..space.total_dim() {
                prop_assert_eq!(space.flat_index(&space.multi_index(flat)), flat);
            }
        }

        #[test]
        fn disjoint_slots_commute(a in arb_local(2), b in arb_local(3)) {
            let space = two_by_three();
            let ea = embed(&a, "a", &space).unwrap();
            let eb = embed(&b, "b", &space).unwrap();
            let diff = ea.mul(&eb).unwrap().sub(&eb.mul(&ea).unwrap()).unwrap();
            prop_assert!(diff.matrix().max_abs() < 1e-14);
        }

        #[test]
        fn embed_is_homomorphism(a in arb_local(3), b in arb_local(3)) {
            let space = two_by_three();
            let lhs = embed(&(&a * &b), "b", &space).unwrap();
            let rhs = embed(&a, "b", &space).unwrap().mul(&embed(&b, "b", &space).unwrap()).unwrap();
            prop_assert!(lhs.matrix().sub(rhs.matrix()).max_abs() < 1e-14);
        }

        #[test]
        fn embed_preserves_spectrum(v in proptest::collection::vec(-1.0f64..1.0, 6)) {
            // Hermitian local operator so eigenvalues are real and sortable.
            let a = CMatrix::from_fn(3, 3, |i, j| {
                let k = i.min(j) * 3 + i.max(j);
                if i == j { c(v[i], 0.0) } else { c(v[k % 6], if i < j { 0.3 } else { -0.3 }) }
            });
            let space = two_by_three();
            let local = a.hermitian_eigenvalues();
            let full = embed(&a, "b", &space).unwrap().to_dense().hermitian_eigenvalues();
            for (k, ev) in full.iter().enumerate() {
                prop_assert!((ev - local[k / 2]).abs() < 1e-12);
            }
        }
    }
}
