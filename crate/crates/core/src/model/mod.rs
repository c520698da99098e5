//! Declarative level schemes, the Hamiltonian `H0 + Hg + V+ + V-` and the
//! collapse operators built from them.

mod build;
mod expr;
mod params;
pub mod presets;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{re, vec_norm, C64, ZERO};

pub use build::{build_collapse_ops, build_hamiltonian, hamiltonian_parts, CollapseChannel, HamiltonianParts};
pub use expr::{ParseExprError, Symbol, SymbolExpr};
pub use params::SimParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("space does not match the scheme: {0}")]
    SpaceMismatch(String),
    #[error("N-dimensional scheme needs N >= 3, got {0}")]
    DimensionTooSmall(usize),
    #[error(transparent)]
    Hilbert(#[from] crate::hilbert::HilbertError),
}

/// One atom: ground levels first, then excited levels, in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub label: String,
    pub ground: Vec<String>,
    pub excited: Vec<String>,
}

impl Atom {
    pub fn level_count(&self) -> usize {
        self.ground.len() + self.excited.len()
    }

    /// Local basis index of a level.
    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.ground
            .iter()
            .position(|l| l == level)
            .or_else(|| self.excited.iter().position(|l| l == level).map(|k| k + self.ground.len()))
    }

    pub fn is_ground(&self, level: &str) -> bool {
        self.ground.iter().any(|l| l == level)
    }

    pub fn is_excited(&self, level: &str) -> bool {
        self.excited.iter().any(|l| l == level)
    }

    pub fn level_label(&self, index: usize) -> &str {
        if index < self.ground.len() {
            &self.ground[index]
        } else {
            &self.excited[index - self.ground.len()]
        }
    }
}

/// Laser term `amplitude |excited><ground|` (+ H.c.), part of `V+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserDrive {
    pub atom: String,
    pub excited: String,
    pub ground: String,
    pub amplitude: SymbolExpr,
}

/// Microwave term `amplitude |to><from|` + H.c. between two ground levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrowaveCoupling {
    pub atom: String,
    pub to: String,
    pub from: String,
    pub amplitude: SymbolExpr,
}

/// Cavity term `strength |ground><excited| a_mode^dagger` + H.c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityCoupling {
    pub atom: String,
    pub excited: String,
    pub ground: String,
    pub mode: String,
    pub strength: SymbolExpr,
}

/// Spontaneous emission `sqrt(rate) |ground><excited|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayChannel {
    pub atom: String,
    pub excited: String,
    pub ground: String,
    pub rate: SymbolExpr,
}

/// One term `weight |level_1 level_2>` of the two-atom target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetTerm {
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub levels: [String; 2],
}

fn unit_weight() -> f64 {
    1.0
}

/// Complete description of a two-atom, multi-mode scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelScheme {
    pub name: String,
    pub atoms: Vec<Atom>,
    #[serde(rename = "modes")]
    pub cavity_modes: Vec<String>,
    #[serde(rename = "drives", default)]
    pub laser_drives: Vec<LaserDrive>,
    #[serde(rename = "microwaves", default)]
    pub microwave_couplings: Vec<MicrowaveCoupling>,
    #[serde(rename = "couplings", default)]
    pub cavity_couplings: Vec<CavityCoupling>,
    #[serde(rename = "decays", default)]
    pub decay_channels: Vec<DecayChannel>,
    pub target: Vec<TargetTerm>,
}

const BRANCHING_TOL: f64 = 1e-12;

impl LevelScheme {
    pub fn atom(&self, label: &str) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.label == label)
    }

    /// Index of an atom in `atoms` (its tensor slot).
    pub fn atom_slot(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.label == label)
    }

    /// Checks label closure, transition kinds, branching completeness and the
    /// target state.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidScheme(msg));
        if self.atoms.len() != 2 {
            return bad(format!("exactly two atoms are supported, found {}", self.atoms.len()));
        }
        let mut labels: Vec<&str> = Vec::new();
        for a in &self.atoms {
            if a.ground.is_empty() {
                return bad(format!("atom `{}` has no ground levels", a.label));
            }
            let mut levels: Vec<&str> = Vec::new();
            for l in a.ground.iter().chain(&a.excited) {
                if levels.contains(&l.as_str()) {
                    return bad(format!("atom `{}` has duplicate level `{l}`", a.label));
                }
                levels.push(l);
            }
            labels.push(&a.label);
        }
        for m in &self.cavity_modes {
            labels.push(m);
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return bad(format!("duplicate subsystem label `{l}`"));
            }
        }

        let atom = |name: &str| self.atom(name).ok_or_else(|| ModelError::InvalidScheme(format!("unknown atom `{name}`")));
        let need = |ok: bool, msg: String| if ok { Ok(()) } else { Err(ModelError::InvalidScheme(msg)) };

        for d in &self.laser_drives {
            let a = atom(&d.atom)?;
            need(a.is_excited(&d.excited), format!("laser drive: `{}` is not an excited level of `{}`", d.excited, a.label))?;
            need(a.is_ground(&d.ground), format!("laser drive: `{}` is not a ground level of `{}`", d.ground, a.label))?;
        }
        for m in &self.microwave_couplings {
            let a = atom(&m.atom)?;
            need(a.is_ground(&m.to) && a.is_ground(&m.from), format!("microwave {}->{}: both levels must be ground levels of `{}`", m.from, m.to, a.label))?;
            need(m.to != m.from, format!("microwave self-transition on `{}`", m.to))?;
        }
        for c in &self.cavity_couplings {
            let a = atom(&c.atom)?;
            need(a.is_excited(&c.excited), format!("cavity coupling: `{}` is not an excited level of `{}`", c.excited, a.label))?;
            need(a.is_ground(&c.ground), format!("cavity coupling: `{}` is not a ground level of `{}`", c.ground, a.label))?;
            need(self.cavity_modes.contains(&c.mode), format!("cavity coupling: unknown mode `{}`", c.mode))?;
        }
        for d in &self.decay_channels {
            let a = atom(&d.atom)?;
            need(a.is_excited(&d.excited), format!("decay: `{}` is not an excited level of `{}`", d.excited, a.label))?;
            need(a.is_ground(&d.ground), format!("decay: `{}` is not a ground level of `{}`", d.ground, a.label))?;
            need(d.rate.symbol == Symbol::Gamma && d.rate.factor() > 0.0, format!("decay {}->{}: rate must be a positive fraction of gamma", d.excited, d.ground))?;
        }
        for a in &self.atoms {
            for e in &a.excited {
                let total: f64 = self
                    .decay_channels
                    .iter()
                    .filter(|d| d.atom == a.label && &d.excited == e)
                    .map(|d| d.rate.factor())
                    .sum();
                need((total - 1.0).abs() <= BRANCHING_TOL, format!("decay branching from `{e}` of `{}` sums to {total} gamma, expected gamma", a.label))?;
            }
        }

        if self.target.is_empty() {
            return bad("target state is empty".into());
        }
        for t in &self.target {
            for (a, l) in self.atoms.iter().zip(&t.levels) {
                need(a.is_ground(l), format!("target: `{l}` is not a ground level of `{}`", a.label))?;
            }
        }
        let v = self.raw_target_vector();
        need(vec_norm(&v) > 0.0, "target state has zero norm".into())?;
        Ok(())
    }

    fn raw_target_vector(&self) -> Vec<C64> {
        let n2 = self.atoms[1].ground.len();
        let mut v = alloc::vec![ZERO; self.atoms[0].ground.len() * n2];
        for t in &self.target {
            if let (Some(i), Some(j)) = (self.atoms[0].level_index(&t.levels[0]), self.atoms[1].level_index(&t.levels[1])) {
                if i < self.atoms[0].ground.len() && j < n2 {
                    v[i * n2 + j] += re(t.weight);
                }
            }
        }
        v
    }

    /// Normalized target on the two-atom ground basis
    /// (atom-1 ground index major, atom-2 ground index minor).
    pub fn target_vector(&self) -> Vec<C64> {
        let v = self.raw_target_vector();
        let n = vec_norm(&v);
        v.into_iter().map(|z| z / n).collect()
    }

    /// Ground configuration labels in ground-basis order, e.g. `"gL gR"`.
    pub fn ground_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.atoms[0].ground {
            for b in &self.atoms[1].ground {
                out.push(format!("{a} {b}"));
            }
        }
        out
    }
}
