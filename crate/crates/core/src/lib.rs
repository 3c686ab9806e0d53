//! Numerical laboratory for triple junctions of the vector-valued Allen–Cahn
//! equation `Δu − ∇W(u) = 0` with `u: ℝ² → ℝ³` (extruded along the spine to
//! ℝ³ when needed).
//!
//! The pipeline is
//!
//! 1. [`potential`]: triple-well potentials and their structural checks,
//! 2. [`connect`]: heteroclinic connections `U_ij` and their actions `σ_ij`,
//! 3. [`field`]: relaxation of a triod on a square grid plus far-field
//!    evaluation and decay/profile diagnostics,
//! 4. [`stress`]: the stress tensor `T(u)` and its divergence identity,
//! 5. [`flux`]: circle and sphere flux integrals, including the sphere
//!    surgery into caps, strips and slices,
//! 6. [`young`]: contact angles and the force balance `Σ σ_ij ν_ij = 0`,
//! 7. [`cli`]: configuration, orchestration and persistence.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod connect;
pub mod error;
pub mod field;
pub mod flux;
pub mod numeric;
pub mod potential;
pub mod stress;
pub mod young;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
