//! Numerical toolkit for certifying device-independent key rates from
//! high-dimensional two-basis Bell correlations.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`], [`eigen`], [`entropy`]: dense complex linear algebra and
//!   entropy primitives,
//! - [`construction`]: the (d, ε) family of realizations, overlap matrices
//!   and junk-padded dilations,
//! - [`selftest`]: the overlap relations, the explicit local isometries and
//!   the extraction identities they certify,
//! - [`keyrate`]: Born correlations, classical-quantum states and the
//!   Devetak–Winter bound,
//! - [`locality`]: deterministic strategies, Bell functional bounds and
//!   ℓ₁ distance to the local polytope by linear programming,
//! - [`io`]: JSON file formats for correlations, functionals and measurement
//!   plugins.

pub mod construction;
pub mod eigen;
pub mod entropy;
pub mod error;
pub mod io;
pub mod keyrate;
pub mod locality;
pub mod matrix;
pub mod selftest;
mod simplex;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, StateVector};
