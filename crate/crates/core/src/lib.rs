//! Observability analysis for dynamical systems whose measurements are
//! delayed, filtered, or passed through a nonlinear encoder.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: RK4 integration, symmetric eigen-decomposition, numeric
//!   rank, quadrature and finite-difference stencils.
//! - [`linear_delay`]: discrete LTI systems whose output is a finite
//!   weighted window of past states.
//! - [`lie_composite`]: Lie derivatives of composite outputs `g ∘ h`, the
//!   multiset expansion of their higher orders and the determinant relation
//!   between the two observability matrices.
//! - [`wing`]: flexible flapping-wing modal dynamics, stroke kinematics and
//!   surface strain.
//! - [`neural_encoding`]: spike-triggered-average filtering followed by a
//!   logistic activation.
//! - [`empirical_gramian`]: empirical observability Gramians and the metrics
//!   derived from them.
//! - [`placement`]: Gramian-based sensor placement by projected subgradient
//!   descent.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod empirical_gramian;
pub mod error;
pub mod lie_composite;
pub mod linear_delay;
pub mod neural_encoding;
pub mod numerics;
pub mod placement;
pub mod wing;

pub use error::{ObsError, Result};
pub use numerics::{Matrix, ToleranceConfig, Vector};
