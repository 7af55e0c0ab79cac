//! Sub-homogeneous Lane-Emden problems for the p-Laplacian on convex sets.
//!
//! The positive minimizer `w_{Ω,α}` of
//! `(1/p)∫|∇ψ|^p − (α/q)∫|ψ|^q` (`1 ≤ q < p`) is computed on uniform grids,
//! together with the one-dimensional and radial profiles, the principal
//! frequencies `λ_{p,q}` and checks of the geometric estimates they satisfy.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frequencies;
pub mod geometry;
pub mod grid;
pub mod onedim;
pub mod par;
pub mod pde;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{ConvexDomain, DomainMetrics};
pub use grid::Grid;
pub use onedim::PQParams;
pub use par::Exec;
pub use pde::{GridFunction, SolveOptions, SolveReport};
pub use verify::VerifyReport;
