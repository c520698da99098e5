//! Driven-dissipative preparation of two-atom qutrit entanglement in a
//! two-mode cavity.
//!
//! The crate builds the atom-cavity Hamiltonian and collapse operators from
//! a declarative [`model::LevelScheme`], evolves density matrices under the
//! Lindblad equation, computes steady states, and reduces the model to
//! effective ground-manifold operators by adiabatic elimination.
//!
//! Units: every frequency and rate is a multiple of the atom-cavity
//! coupling `g`; time is measured in `1/g`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod effective;
pub mod engine;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod observables;
