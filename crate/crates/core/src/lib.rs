//! Spectral analytics for the dipole-approximated Pauli-Fierz model and the N-body Nelson model.

pub mod binding;
pub mod cli;
pub mod dispersion;
pub mod fock;
pub mod gse;
pub mod lattice;
pub mod nelson;
pub mod symplectic;
pub mod numerics;
