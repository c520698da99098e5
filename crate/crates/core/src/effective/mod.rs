//! Adiabatic elimination of the weakly driven excited manifold:
//! `H_eff = -(V- H_NH^-1 V+ + V- (H_NH^-1)^dagger V+) / 2 + H_g`,
//! `L_eff,j = L_j H_NH^-1 V+`, with `H_NH = H0 - (i/2) sum L^dagger L`.

mod closed;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dynamics::decay_operator;
use crate::hilbert::{build_space, HilbertError, Operator, Space, SpaceRef};
use crate::linalg::{c, CMatrix, SparseMatrix};
use crate::model::{build_collapse_ops, hamiltonian_parts, CollapseChannel, LevelScheme, ModelError, SimParams};

pub use closed::{
    closed_form_effective, dominant_lindblads, hnh_inverse_closed_form, named_states, alternate_t2_coefficient,
    t2_coefficient, DecayFamily, NamedStates,
};

/// Inversions with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EffectiveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("cavity truncation n_max = 0 leaves no room for the excited manifold")]
    NoPhotonSpace,
    #[error("H0 couples the ground manifold to other states (|entry| = {0:e}); pass H0 without V and H_g")]
    GroundCoupled(f64),
    #[error("H_NH is singular or ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("closed forms exist only for the bundled two-mode qutrit scheme")]
    UnsupportedScheme,
    #[error("dominant channels require delta = g^2/Delta (delta = {delta}, g^2/Delta = {expected})")]
    NotDominantRegime { delta: f64, expected: f64 },
}

impl From<crate::dynamics::DynamicsError> for EffectiveError {
    fn from(e: crate::dynamics::DynamicsError) -> Self {
        match e {
            crate::dynamics::DynamicsError::Hilbert(h) => Self::Hilbert(h),
            _ => Self::Hilbert(HilbertError::SpaceMismatch),
        }
    }
}

/// Ground (no atomic excitation, cavity vacuum) and excited flat indices,
/// both sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifoldPartition {
    pub ground: Vec<usize>,
    /// Closure of `V+ (ground)` under `H0`: one excitation quantum, either
    /// atomic or photonic.
    pub excited: Vec<usize>,
}

impl ManifoldPartition {
    /// Position of a flat index inside `excited`.
    pub fn excited_position(&self, flat: usize) -> Option<usize> {
        self.excited.binary_search(&flat).ok()
    }

    pub fn ground_position(&self, flat: usize) -> Option<usize> {
        self.ground.binary_search(&flat).ok()
    }
}

/// A dense block on a subset of flat basis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldMatrix {
    pub indices: Vec<usize>,
    pub matrix: CMatrix,
}

/// Reduced model on the two-atom ground manifold.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    /// `atom1 (x) atom2` restricted to ground levels.
    pub space: SpaceRef,
    /// Basis labels such as `"gL gR"`.
    pub labels: Vec<String>,
    pub hamiltonian: Operator,
    /// One per original channel, same labels and order.
    pub lindblads: Vec<CollapseChannel>,
    /// Of `H_NH` (generic path only).
    pub condition_number: Option<f64>,
}

impl EffectiveModel {
    /// Channels with a nonzero operator.
    pub fn nonzero_lindblads(&self) -> impl Iterator<Item = &CollapseChannel> {
        self.lindblads.iter().filter(|c| !c.operator.is_zero())
    }
}

/// Ground space `atom1 (x) atom2` with only ground levels.
pub fn ground_space(scheme: &LevelScheme) -> Result<SpaceRef, EffectiveError> {
    scheme.validate()?;
    let s = Space::new(scheme.atoms.iter().map(|a| (a.label.clone(), a.ground.len())))?;
    Ok(Arc::new(s))
}

fn unit_params(n_max: usize) -> SimParams {
    SimParams { g: 1.0, rabi: 1.0, microwave: 1.0, detuning: 1.0, cavity_detuning: Some(1.0), gamma: 1.0, kappa: 1.0, n_max, ..SimParams::default() }
}

/// Splits the space of `scheme` into the ground and excited manifolds.
pub fn partition_manifolds(scheme: &LevelScheme, space: &SpaceRef) -> Result<ManifoldPartition, EffectiveError> {
    let n_atoms = scheme.atoms.len();
    let n_max = space.factors().get(n_atoms).map(|f| f.dim - 1).unwrap_or(0);
    if n_max == 0 && !scheme.cavity_modes.is_empty() {
        return Err(EffectiveError::NoPhotonSpace);
    }
    let parts = hamiltonian_parts(&unit_params(n_max), scheme, space)?;

    let is_ground = |flat: usize| {
        let m = space.multi_index(flat);
        scheme.atoms.iter().zip(&m).all(|(a, &i)| i < a.ground.len()) && m[n_atoms..].iter().all(|&n| n == 0)
    };
    let ground: Vec<usize> = (0..space.total_dim()).filter(|&i| is_ground(i)).collect();

    let v = parts.v_plus.matrix();
    let h0 = parts.h0.matrix();
    let mut excited = BTreeSet::new();
    let mut frontier = Vec::new();
    for (i, j, _) in v.iter() {
        if ground.binary_search(&j).is_ok() && excited.insert(i) {
            frontier.push(i);
        }
    }
    while let Some(k) = frontier.pop() {
        // H0 is Hermitian, so its rows list every neighbour.
        let (cols, _) = h0.row(k);
        for &j in cols {
            if excited.insert(j) {
                frontier.push(j);
            }
        }
    }
    Ok(ManifoldPartition { ground, excited: excited.into_iter().collect() })
}

/// `H0 - (i/2) sum L^dagger L` restricted to the excited manifold.
pub fn nh_hamiltonian<O: AsRef<Operator>>(h0: &Operator, ls: &[O], part: &ManifoldPartition) -> Result<CMatrix, EffectiveError> {
    let ground: BTreeSet<usize> = part.ground.iter().copied().collect();
    let leak = h0
        .matrix()
        .iter()
        .filter(|&(i, j, _)| ground.contains(&i) != ground.contains(&j))
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    if leak > 0.0 {
        return Err(EffectiveError::GroundCoupled(leak));
    }
    let mut k = h0.matrix().clone();
    if !ls.is_empty() {
        let d = decay_operator(ls)?;
        if **d.space() != **h0.space() {
            return Err(HilbertError::SpaceMismatch.into());
        }
        k = k.sub(&d.matrix().scale(c(0.0, 0.5)));
    }
    Ok(k.select(&part.excited, &part.excited))
}

fn ground_operator(space: &SpaceRef, m: &CMatrix) -> Result<Operator, EffectiveError> {
    Ok(Operator::new(space.clone(), SparseMatrix::from_dense(m))?)
}

/// Generic reduction for any scheme, built at `params.n_max` (at least 1).
pub fn effective_operators(params: &SimParams, scheme: &LevelScheme) -> Result<EffectiveModel, EffectiveError> {
    params.validate()?;
    if params.n_max == 0 {
        return Err(EffectiveError::NoPhotonSpace);
    }
    let space = build_space(scheme, params.n_max)?;
    let part = partition_manifolds(scheme, &space)?;
    let parts = hamiltonian_parts(params, scheme, &space)?;
    let ls = build_collapse_ops(params, scheme, &space)?;

    let nh = nh_hamiltonian(&parts.h0, &ls, &part)?;
    let cond = nh.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(EffectiveError::IllConditioned(cond));
    }
    let inv = nh.inverse().ok_or(EffectiveError::IllConditioned(cond))?;

    let v = parts.v_plus.matrix().select(&part.excited, &part.ground);
    let vd = v.adjoint();
    let hg = parts.hg.matrix().select(&part.ground, &part.ground);
    let sym = &(&vd * &(&inv * &v)) + &(&vd * &(&inv.adjoint() * &v));
    let h_eff = &sym.scale(c(-0.5, 0.0)) + &hg;

    let gspace = ground_space(scheme)?;
    let inv_v = &inv * &v;
    let mut lindblads = Vec::with_capacity(ls.len());
    for ch in &ls {
        let lj = ch.operator.matrix().select(&part.ground, &part.excited);
        lindblads.push(CollapseChannel { label: ch.label.clone(), operator: ground_operator(&gspace, &(&lj * &inv_v))? });
    }
    Ok(EffectiveModel {
        labels: scheme.ground_labels(),
        hamiltonian: ground_operator(&gspace, &h_eff)?,
        space: gspace,
        lindblads,
        condition_number: Some(cond),
    })
}
