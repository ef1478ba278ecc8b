//! Numerical checks for stretch deformations of hyperbolic cylinders, Beltrami
//! coefficients and their solutions, David-type distortion budgets, Schwarzian
//! derivatives and Bers norms, and L1 estimates for holomorphic functions on annuli.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annulus;
pub mod bounds;
pub mod cli;
pub mod cylinder;
pub mod david;
pub mod error;
pub mod schwarzian;
pub mod solver;
pub mod stretch;

pub use error::{LabError, Result};
