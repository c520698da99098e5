use alloc::vec::Vec;

use crate::hilbert::{HilbertError, Operator, SpaceRef};
use crate::linalg::{c, CMatrix, SparseMatrix, C64, I, ONE, ZERO};

use super::{DensityMatrix, DynamicsError};

/// `sum_j L_j^dagger L_j`.
pub fn decay_operator<O: AsRef<Operator>>(ls: &[O]) -> Result<Operator, DynamicsError> {
    let first = ls.first().ok_or(DynamicsError::NoOperators)?.as_ref();
    let mut acc = Operator::zero(first.space().clone());
    for l in ls {
        let l = l.as_ref();
        acc = acc.add(&l.adjoint().mul(l)?)?;
    }
    Ok(acc)
}

/// Precomputed Lindblad generator.
///
/// Stores `K = H - (i/2) sum L^dagger L` so that
/// `rho' = -i K rho + i rho K^dagger + sum L rho L^dagger`.
#[derive(Debug, Clone)]
pub struct Lindblad {
    space: SpaceRef,
    k: SparseMatrix,
    collapse: Vec<SparseMatrix>,
    /// Entries of each collapse operator, kept when a direct double sum
    /// over them is cheaper than two sparse products and a transpose.
    jump_entries: Vec<Option<Vec<(usize, usize, C64)>>>,
}

impl Lindblad {
    /// Zero collapse operators are dropped.
    pub fn new<O: AsRef<Operator>>(h: &Operator, ls: &[O]) -> Result<Self, DynamicsError> {
        let space = h.space().clone();
        let mut k = h.matrix().clone();
        let mut collapse = Vec::new();
        for l in ls {
            let l = l.as_ref();
            if **l.space() != *space {
                return Err(HilbertError::SpaceMismatch.into());
            }
            if l.is_zero() {
                continue;
            }
            let ldl = l.matrix().adjoint().matmul(l.matrix());
            k = k.sub(&ldl.scale(c(0.0, 0.5)));
            collapse.push(l.matrix().clone());
        }
        let d = space.total_dim();
        let jump_entries = collapse
            .iter()
            .map(|l| {
                let n = l.nnz();
                (n * n <= 2 * n * d + d * d).then(|| l.triplets())
            })
            .collect();
        Ok(Self { space, k, collapse, jump_entries })
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn has_dissipation(&self) -> bool {
        !self.collapse.is_empty()
    }

    /// Effective non-Hermitian `K`.
    pub fn k(&self) -> &SparseMatrix {
        &self.k
    }

    /// Writes `L(rho)` into `out`; both are row-major `d x d`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let d = self.dim();
        debug_assert_eq!(rho.len(), d * d);
        out.iter_mut().for_each(|z| *z = ZERO);

        // -i K rho
        for i in 0..d {
            let (cols, vals) = self.k.row(i);
            let o = &mut out[i * d..(i + 1) * d];
            for (&k, &v) in cols.iter().zip(vals) {
                let f = -I * v;
                for (oj, rj) in o.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                    *oj += f * rj;
                }
            }
        }
        // + i rho K^dagger: (rho K^dagger)_ij = sum_k rho_ik conj(K_jk)
        for (j, k, v) in self.k.iter() {
            let f = I * v.conj();
            for i in 0..d {
                out[i * d + j] += f * rho[i * d + k];
            }
        }
        // + L rho L^dagger
        scratch.resize(d * d, ZERO);
        for l in &self.collapse {
            scratch.iter_mut().for_each(|z| *z = ZERO);
            for i in 0..d {
                let (cols, vals) = l.row(i);
                for (&k, &v) in cols.iter().zip(vals) {
                    let s = &mut scratch[i * d..(i + 1) * d];
                    for (sj, rj) in s.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                        *sj += v * rj;
                    }
                }
            }
            for (j, k, v) in l.iter() {
                let f = v.conj();
                for i in 0..d {
                    out[i * d + j] += scratch[i * d + k] * f;
                }
            }
        }
    }

    /// Same as [`Lindblad::apply`] for Hermitian `rho`, using only
    /// row-contiguous updates: `A = -i K rho + sum L (L rho)^dagger / 2`,
    /// then `out = A + A^dagger`.
    pub fn apply_hermitian(&self, rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let d = self.dim();
        debug_assert_eq!(rho.len(), d * d);
        out.iter_mut().for_each(|z| *z = ZERO);
        row_mul_add(&self.k, -I, rho, out, d);

        scratch.resize(2 * d * d, ZERO);
        let (s, t) = scratch.split_at_mut(d * d);
        for (l, entries) in self.collapse.iter().zip(&self.jump_entries) {
            if let Some(entries) = entries {
                // Few nonzeros: (L rho L^dagger)_ij = sum L_ik rho_km conj(L_jm).
                for &(i, k, x) in entries {
                    let x = x * 0.5;
                    let o = &mut out[i * d..(i + 1) * d];
                    let r = &rho[k * d..(k + 1) * d];
                    for &(j, m, y) in entries {
                        o[j] += x * r[m] * y.conj();
                    }
                }
                continue;
            }
            s.iter_mut().for_each(|z| *z = ZERO);
            row_mul_add(l, ONE, rho, s, d);
            for i in 0..d {
                for j in 0..d {
                    t[i * d + j] = s[j * d + i].conj();
                }
            }
            row_mul_add(l, c(0.5, 0.0), t, out, d);
        }
        for i in 0..d {
            out[i * d + i] = c(2.0 * out[i * d + i].re, 0.0);
            for j in i + 1..d {
                let (a, b) = (out[i * d + j], out[j * d + i]);
                out[i * d + j] = a + b.conj();
                out[j * d + i] = b + a.conj();
            }
        }
    }

    pub fn rhs(&self, rho: &DensityMatrix) -> Result<CMatrix, DynamicsError> {
        if **rho.space() != *self.space {
            return Err(HilbertError::SpaceMismatch.into());
        }
        let d = self.dim();
        let mut out = alloc::vec![ZERO; d * d];
        self.apply(rho.entries().as_slice(), &mut out, &mut Vec::new());
        Ok(CMatrix::from_row_major(d, d, out))
    }

    /// `d^2 x d^2` superoperator acting on column-stacked `vec(rho)`,
    /// `vec[i + d j] = rho_ij`:
    /// `I (x) (-iK) + (i conj K) (x) I + sum conj(L) (x) L`.
    pub fn liouvillian(&self) -> SparseMatrix {
        let d = self.dim();
        let id = SparseMatrix::identity(d);
        let mut sup = id.kron(&self.k.scale(-I)).add(&self.k.conj().scale(I).kron(&id));
        for l in &self.collapse {
            sup = sup.add(&l.conj().kron(l));
        }
        sup
    }
}

/// `out += f * m * x` for row-major `d x d` blocks.
fn row_mul_add(m: &SparseMatrix, f: C64, x: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        let (cols, vals) = m.row(i);
        let o = &mut out[i * d..(i + 1) * d];
        for (&k, &v) in cols.iter().zip(vals) {
            let w = f * v;
            for (oj, xj) in o.iter_mut().zip(&x[k * d..(k + 1) * d]) {
                *oj += w * xj;
            }
        }
    }
}

/// `i[rho, H] + sum_j (L_j rho L_j^dagger - {L_j^dagger L_j, rho} / 2)`.
pub fn lindblad_rhs<O: AsRef<Operator>>(rho: &DensityMatrix, h: &Operator, ls: &[O]) -> Result<CMatrix, DynamicsError> {
    Lindblad::new(h, ls)?.rhs(rho)
}

/// See [`Lindblad::liouvillian`] for the vectorization convention.
pub fn liouvillian_matrix<O: AsRef<Operator>>(h: &Operator, ls: &[O]) -> Result<SparseMatrix, DynamicsError> {
    Ok(Lindblad::new(h, ls)?.liouvillian())
}

/// Column-stacked `vec(rho)`.
pub(crate) fn vectorize(m: &CMatrix) -> Vec<C64> {
    let d = m.rows();
    let mut v = alloc::vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            v[i + d * j] = m[(i, j)];
        }
    }
    v
}

pub(crate) fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i + d * j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Space;
    use crate::linalg::re;
    use alloc::sync::Arc;
    use alloc::vec;
    use proptest::prelude::*;

    fn qubit() -> SpaceRef {
        Arc::new(Space::new([("q", 2)]).unwrap())
    }

    /// Basis order `g, e`.
    fn lowering(space: &SpaceRef, gamma: f64) -> Operator {
        Operator::new(space.clone(), SparseMatrix::from_triplets(2, 2, &[(0, 1, re(gamma.sqrt()))])).unwrap()
    }

    fn random_density(d: usize, seed: &[f64]) -> CMatrix {
        let a = CMatrix::from_fn(d, d, |i, j| {
            let k = (i * d + j) % seed.len();
            c(seed[k], seed[(k + 7) % seed.len()] - 0.3)
        });
        let rho = &a * &a.adjoint();
        let tr = rho.trace().re;
        rho.scale(re(1.0 / tr))
    }

    /// Direct dense evaluation of the textbook formula.
    fn dense_rhs(rho: &CMatrix, h: &CMatrix, ls: &[CMatrix]) -> CMatrix {
        let mut out = (&(rho * h) - &(h * rho)).scale(I);
        for l in ls {
            let ld = l.adjoint();
            let ldl = &ld * l;
            out = &out + &(&(&(l * rho) * &ld) - &(&(&ldl * rho) + &(rho * &ldl)).scale(re(0.5)));
        }
        out
    }

    fn three_d_generator() -> (Operator, Vec<Operator>) {
        use crate::hilbert::build_space;
        use crate::model::{build_collapse_ops, build_hamiltonian, presets, SimParams};
        let p = SimParams { kappa: 0.05, ..SimParams::default() };
        let scheme = presets::paper_3d_scheme();
        let space = build_space(&scheme, 1).unwrap();
        let h = build_hamiltonian(&p, &scheme, &space).unwrap();
        let ls = build_collapse_ops(&p, &scheme, &space).unwrap().into_iter().map(|c| c.operator).collect();
        (h, ls)
    }

    #[test]
    fn no_generator_gives_zero() {
        let s = qubit();
        let rho = DensityMatrix::maximally_mixed(s.clone());
        let out = lindblad_rhs::<Operator>(&rho, &Operator::zero(s), &[]).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn excited_population_decays_at_gamma() {
        let s = qubit();
        let rho = DensityMatrix::basis_state(s.clone(), 1).unwrap();
        let out = lindblad_rhs(&rho, &Operator::zero(s.clone()), &[lowering(&s, 0.7)]).unwrap();
        assert!((out[(1, 1)] - re(-0.7)).norm() < 1e-15);
        assert!((out[(0, 0)] - re(0.7)).norm() < 1e-15);
    }

    #[test]
    fn matches_dense_formula_on_3d_model() {
        let (h, ls) = three_d_generator();
        let d = h.dim();
        let rho = random_density(d, &[0.1, 0.5, 0.9, 0.2, 0.33, 0.71, 0.05, 0.64, 0.48, 0.27, 0.81]);
        let dm = DensityMatrix::new(h.space().clone(), rho.clone()).unwrap();
        let fast = lindblad_rhs(&dm, &h, &ls).unwrap();
        let dense_ls: Vec<_> = ls.iter().map(|l| l.to_dense()).collect();
        let slow = dense_rhs(&rho, &h.to_dense(), &dense_ls);
        assert!((&fast - &slow).max_abs() < 1e-14);
        assert!(fast.trace().norm() < 1e-14);

        let gen = Lindblad::new(&h, &ls).unwrap();
        let mut herm = vec![ZERO; d * d];
        gen.apply_hermitian(rho.as_slice(), &mut herm, &mut Vec::new());
        assert!((&CMatrix::from_row_major(d, d, herm) - &slow).max_abs() < 1e-14);
    }

    #[test]
    fn liouvillian_matches_rhs_on_random_states() {
        let (h, ls) = three_d_generator();
        let gen = Lindblad::new(&h, &ls).unwrap();
        let sup = gen.liouvillian();
        let d = gen.dim();
        for n in 0..20 {
            let seed: Vec<f64> = (0..13).map(|k| ((k * 31 + n * 17) % 23) as f64 / 23.0).collect();
            let rho = DensityMatrix::new(h.space().clone(), random_density(d, &seed)).unwrap();
            let direct = gen.rhs(&rho).unwrap();
            let via_sup = unvectorize(&sup.matvec(&vectorize(rho.entries())), d);
            assert!((&direct - &via_sup).max_abs() < 1e-12, "sample {n}");
        }
    }

    #[test]
    fn identity_is_left_null_vector() {
        let (h, ls) = three_d_generator();
        let sup = liouvillian_matrix(&h, &ls).unwrap();
        let d = h.dim();
        let id = vectorize(&CMatrix::identity(d));
        let left = sup.adjoint().matvec(&id);
        assert!(left.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn damped_two_level_spectrum() {
        let s = qubit();
        let gamma = 0.3;
        let sup = liouvillian_matrix(&Operator::zero(s.clone()), &[lowering(&s, gamma)]).unwrap();
        let mut ev: Vec<f64> = sup.to_dense().eigenvalues().iter().map(|z| {
            assert!(z.im.abs() < 1e-14);
            z.re
        }).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-gamma, -gamma / 2.0, -gamma / 2.0, 0.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let s = qubit();
        let other: SpaceRef = Arc::new(Space::new([("r", 2)]).unwrap());
        assert!(Lindblad::new(&Operator::zero(s), &[Operator::identity(other.clone())]).is_err());
        let rho = DensityMatrix::maximally_mixed(other);
        assert!(lindblad_rhs::<Operator>(&rho, &Operator::zero(qubit()), &[]).is_err());
        let gen = Lindblad::new::<Operator>(&Operator::identity(Arc::new(Space::new([("x", 3)]).unwrap())), &[]).unwrap();
        assert!(gen.rhs(&DensityMatrix::maximally_mixed(qubit())).is_err());
    }

    proptest! {
        #[test]
        fn rhs_is_traceless_and_hermitian(seed in proptest::collection::vec(0.0f64..1.0, 8..16), gamma in 0.0f64..2.0, omega in -1.0f64..1.0) {
            let s = qubit();
            let h = Operator::new(s.clone(), SparseMatrix::from_dense(&CMatrix::from_row_major(2, 2, vec![ZERO, re(omega), re(omega), re(0.3)]))).unwrap();
            let rho = DensityMatrix::new(s.clone(), random_density(2, &seed)).unwrap();
            let out = lindblad_rhs(&rho, &h, &[lowering(&s, gamma)]).unwrap();
            prop_assert!(out.trace().norm() < 1e-14);
            prop_assert!(out.hermiticity_error() < 1e-14);
        }
    }
}
