//! Symbolic simulation of random fractal models.
//!
//! The crate works on the coding trees of random fractals rather than on
//! geometry: covering numbers of balls become descendant counts (Galton–Watson
//! boundaries), products of branch counts along a coding window (one-variable
//! self-similar sets) or products of column statistics over two windows
//! (one-variable Bedford–McMullen carpets). On top of these exact counts it
//! estimates the generalised Assouad spectrum for a dimension function `φ`,
//! evaluates the closed-form dimension formulas, and packages the
//! quasi-Assouad/Assouad phase-transition experiments.
//!
//! Modules:
//!
//! * [`dimfunc`]: dimension functions, scale gaps, summability classification.
//! * [`gwtree`]: Galton–Watson trees, covering counts, tail checks.
//! * [`onevar_ss`]: one-variable homogeneous self-similar codings.
//! * [`carpet`]: one-variable Bedford–McMullen carpets.
//! * [`ldp`]: rate functions and Chernoff bounds for finite-atom variables.
//! * [`harness`]: seeded parallel sweeps and CSV emission.

pub mod carpet;
pub mod dimfunc;
pub mod error;
pub mod gwtree;
pub mod harness;
pub mod ldp;
pub mod onevar_ss;
mod rng;

pub use dimfunc::{DimensionFunction, PhiFamily, Summability};
pub use error::{Error, ErrorKind, Result};
pub use rng::{derive_seed, seeded_rng};
