//! Finite-truncation matrix models of the equivariant real even spectral
//! triples on the Podles quantum spheres.
//!
//! The crate builds the irreducible representations of the sphere algebra
//! and of U_q(su(2)) on truncated weight bases, assembles the spinor-space
//! geometry (Dirac operator, grading, real structure, approximants), and
//! provides the verification suite: algebraic identity checks with guard
//! bands, operator-norm decay fits, the Fredholm index pairing, and the
//! zeta-residue extractors.
//!
//! All half-integer indices cross public APIs in the "twice" encoding
//! ([`qarith::HalfInt`]); scalars are generic over [`qarith::Scalar`] with a
//! binary64 fast path and an arbitrary-precision software float.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) only forwards to the numeric dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod basis_ops;
pub mod podles_repr;
pub mod qarith;
pub mod spin_geometry;
pub mod su2_embedding;
pub mod word_algebra;

pub use qarith::{HalfInt, Scalar, SoftFloat};
