//! Exact-diagonalization toolkit for engineered Bose-Hubbard lattices.

pub mod dense;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod krylov;
pub mod lattice;
pub mod lanczos;
pub mod operators;
pub mod oracles;
pub mod protocols;
pub mod pulses;
pub mod sparse;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
