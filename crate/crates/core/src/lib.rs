//! Numerical laboratory for a cooperative two-species reaction–diffusion
//! epidemic model on `(0, h(t))` with a fixed end at `x = 0` and a Stefan
//! free boundary at `x = h(t)`.
//!
//! The crate simulates the moving-boundary dynamics, evaluates the spectral
//! and steady-state objects that govern them, classifies runs as spreading
//! or vanishing and brackets the critical expansion rate and initial
//! amplitude by bisection.

// validation uses `!(x > 0.0)` on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod dichotomy;
pub mod elliptic;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod par;
pub mod spectral;
pub mod stefan;
