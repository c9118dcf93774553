#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]
//! Numerical analysis of smooth bounded Hartogs domains in C^2.
//!
//! The pipeline runs from a defining function `rho(|z|^2, w)` through the
//! signed distance and its complex Hessian to classification of weakly
//! pseudoconvex boundary pieces, closed-form bounds on the exhaustion exponent,
//! Stein neighborhood verdicts, and grid certification of candidate
//! plurisubharmonic exhaustions.

pub mod boundary;
pub mod classify;
pub mod complex;
pub mod cutoff;
pub mod distance;
pub mod error;
pub mod index;
mod ode;
pub mod profile;
pub mod psh;
pub mod report;
pub mod stein;

pub use error::{DflabError, Result};

pub type C64 = num_complex::Complex64;
