//! Exact diagonalization of an interacting Frenkel-exciton ring charged by a
//! single cavity mode.
//!
//! The ring is mapped to spinless fermions; the light-matter Hamiltonian is
//! assembled block by block from closed-form matrix elements between
//! free-fermion eigenstates and evolved spectrally.

pub mod basis;
pub mod blocks;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;
pub mod matrix_elements;
pub mod oracle;
pub mod params;
pub mod perturbation;

pub use error::{Error, Result};
