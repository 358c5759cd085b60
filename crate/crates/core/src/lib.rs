//! Transfer matrix, Temperley-Lieb decomposition and lattice integrals of
//! motion of the critical Ising model on a strip with fixed boundaries.
//!
//! The crate builds every object numerically at small strip width and checks
//! the closed-form statements about it: the inversion identity, the spectrum
//! and its selection rules, the decomposition of the conserved charges on the
//! Temperley-Lieb algebra, their eigenvalues, the free energies and the
//! finitized characters. [`verify`] runs the checks and collects the outcome
//! in a [`report::VerificationReport`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exact;
pub mod free_energy;
pub mod iom;
pub mod lattice;
pub mod matrix;
pub mod qseries;
pub mod report;
pub mod scalar;
pub mod spectrum;
pub mod tl;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::SquareMatrix;
pub use scalar::{Bits, Extended, PrecisionMode, Scalar};
