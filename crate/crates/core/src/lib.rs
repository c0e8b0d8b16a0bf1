//! Gaussian wave packet transform solver for the semi-classical Schrödinger
//! equation with random inputs, using stochastic collocation in `z`.
//!
//! The pipeline integrates packet parameters on a collocation grid M1,
//! propagates the non-oscillatory profile `w` on a small grid M2, and
//! reconstructs `ψ` on M3. A direct split-step spectral solver on M4 serves
//! as the reference.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod classical;
pub mod error;
pub mod harness;
pub mod interp;
pub mod observables;
pub mod packet;
pub mod potential;
pub mod quadrature;
pub mod reconstruct;
pub mod reference;
pub mod spectral;
pub mod wprop;

pub use error::{Error, Result, Stage};
pub use num_complex::Complex64;
