use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::hilbert::{annihilation, embed, Operator, SpaceRef};
use crate::linalg::{re, sqrt, CMatrix, ONE};

use super::{LevelScheme, ModelError, SimParams};

/// The pieces of `H = H0 + Hg + V+ + V-`.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    /// Cavity detuning, atom-cavity couplings and excited-level detuning.
    pub h0: Operator,
    /// Microwave couplings between ground levels.
    pub hg: Operator,
    /// Laser excitation `V+`; `V- = V+^dagger`.
    pub v_plus: Operator,
}

impl HamiltonianParts {
    pub fn v_minus(&self) -> Operator {
        self.v_plus.adjoint()
    }

    pub fn total(&self) -> Operator {
        let h = self.h0.add(&self.hg).and_then(|h| h.add(&self.v_plus)).and_then(|h| h.add(&self.v_minus()));
        h.expect("parts share one space")
    }
}

/// A labeled dissipation channel.
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub label: String,
    pub operator: Operator,
}

impl AsRef<Operator> for CollapseChannel {
    fn as_ref(&self) -> &Operator {
        &self.operator
    }
}

fn check_space(scheme: &LevelScheme, space: &SpaceRef) -> Result<(), ModelError> {
    scheme.validate()?;
    let expected = scheme.atoms.len() + scheme.cavity_modes.len();
    if space.factors().len() != expected {
        return Err(ModelError::SpaceMismatch(format!("{} factors, scheme needs {expected}", space.factors().len())));
    }
    for (f, a) in space.factors().iter().zip(&scheme.atoms) {
        if f.label != a.label || f.dim != a.level_count() {
            return Err(ModelError::SpaceMismatch(format!("factor `{}` does not match atom `{}`", f.label, a.label)));
        }
    }
    for (f, m) in space.factors()[scheme.atoms.len()..].iter().zip(&scheme.cavity_modes) {
        if &f.label != m {
            return Err(ModelError::SpaceMismatch(format!("factor `{}` does not match mode `{m}`", f.label)));
        }
    }
    Ok(())
}

/// Embedded `|to><from|` on an atom.
fn transition(scheme: &LevelScheme, space: &SpaceRef, atom: &str, to: &str, from: &str) -> Result<Operator, ModelError> {
    let a = scheme.atom(atom).ok_or_else(|| ModelError::InvalidScheme(format!("unknown atom `{atom}`")))?;
    let n = a.level_count();
    let (i, j) = (a.level_index(to), a.level_index(from));
    let (Some(i), Some(j)) = (i, j) else {
        return Err(ModelError::InvalidScheme(format!("unknown level on `{atom}`")));
    };
    let mut local = CMatrix::zeros(n, n);
    local[(i, j)] = ONE;
    Ok(embed(&local, atom, space)?)
}

fn mode_lowering(space: &SpaceRef, mode: &str) -> Result<Operator, ModelError> {
    let n_max = space.local_dim(mode)? - 1;
    Ok(embed(&annihilation(n_max), mode, space)?)
}

pub fn hamiltonian_parts(params: &SimParams, scheme: &LevelScheme, space: &SpaceRef) -> Result<HamiltonianParts, ModelError> {
    params.validate()?;
    check_space(scheme, space)?;

    let mut h0 = Operator::zero(space.clone());
    for mode in &scheme.cavity_modes {
        let a = mode_lowering(space, mode)?;
        h0 = h0.add(&a.adjoint().mul(&a)?.scale(re(params.delta())))?;
    }
    for c in &scheme.cavity_couplings {
        let sigma = transition(scheme, space, &c.atom, &c.ground, &c.excited)?;
        let a_dag = mode_lowering(space, &c.mode)?.adjoint();
        let term = sigma.mul(&a_dag)?.scale(re(c.strength.eval(params)));
        h0 = h0.add(&term)?.add(&term.adjoint())?;
    }
    for a in &scheme.atoms {
        for e in &a.excited {
            h0 = h0.add(&transition(scheme, space, &a.label, e, e)?.scale(re(params.detuning)))?;
        }
    }

    let mut hg = Operator::zero(space.clone());
    for m in &scheme.microwave_couplings {
        let term = transition(scheme, space, &m.atom, &m.to, &m.from)?.scale(re(m.amplitude.eval(params)));
        hg = hg.add(&term)?.add(&term.adjoint())?;
    }

    let mut v_plus = Operator::zero(space.clone());
    for d in &scheme.laser_drives {
        v_plus = v_plus.add(&transition(scheme, space, &d.atom, &d.excited, &d.ground)?.scale(re(d.amplitude.eval(params))))?;
    }

    Ok(HamiltonianParts { h0, hg, v_plus })
}

/// Full Hamiltonian `H0 + Hg + V+ + V-`.
pub fn build_hamiltonian(params: &SimParams, scheme: &LevelScheme, space: &SpaceRef) -> Result<Operator, ModelError> {
    Ok(hamiltonian_parts(params, scheme, space)?.total())
}

/// One operator per decay channel, then `sqrt(kappa) a` per cavity mode.
/// Cavity channels are kept (as zero operators) when `kappa = 0`.
pub fn build_collapse_ops(params: &SimParams, scheme: &LevelScheme, space: &SpaceRef) -> Result<Vec<CollapseChannel>, ModelError> {
    params.validate()?;
    check_space(scheme, space)?;
    let mut out = Vec::new();
    for d in &scheme.decay_channels {
        let rate = d.rate.eval(params);
        let op = transition(scheme, space, &d.atom, &d.ground, &d.excited)?.scale(re(sqrt(rate)));
        out.push(CollapseChannel { label: format!("{}:{}->{}", d.atom, d.excited, d.ground), operator: op });
    }
    for mode in &scheme.cavity_modes {
        let op = mode_lowering(space, mode)?.scale(re(sqrt(params.kappa)));
        out.push(CollapseChannel { label: format!("cavity:{mode}"), operator: op });
    }
    Ok(out)
}
