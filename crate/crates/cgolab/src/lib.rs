//! Numerical laboratory for the time-dependent convection-diffusion inverse
//! problem with partial boundary data.
//!
//! The crate solves the forward and adjoint parabolic problems, synthesizes
//! Dirichlet-to-Neumann traces on tagged boundary subsets, constructs complex
//! geometrical optics solutions from the logarithmic Carleman weight, and runs
//! the scan experiments (Carleman ratios, residual scalings, integral
//! identities, moment probes) that exercise the coefficient-recovery
//! machinery at desk scale.
//!
//! Module map:
//! - [`geometry`]: box domains, space-time grids, boundary facet
//!   classification relative to the exterior point, discrete operators;
//! - [`fields`]: sampled scalar/vector fields, coefficient pairs, gauge
//!   transformations, norms;
//! - [`io`]: the `CDF1` field container and JSON sidecars;
//! - [`linalg`]: sparse CSR matrices, ILU(0), BiCGSTAB, and the regularized
//!   normal-equation solver used by the transport collocation;
//! - [`weight`]: the Carleman weight family (phi, psi, eta) with closed-form
//!   derivatives;
//! - [`transport`]: amplitude transport solves and first integrals;
//! - [`cgo`]: conjugated-operator decomposition and CGO assembly;
//! - [`solver`]: implicit finite-difference forward/adjoint/difference solves;
//! - [`dnmap`]: DN trace synthesis and partial-data comparisons;
//! - [`identity`]: integral identity, boundary-term scan, moment probes,
//!   density recovery;
//! - [`experiments`]: scan orchestration and reports;
//! - [`config`] / [`cli`]: run configuration and the command-line front end.

pub mod cgo;
pub mod cli;
pub mod config;
pub mod dnmap;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod fixtures;
pub mod geometry;
pub mod identity;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod solver;
pub mod transport;
pub mod weight;

pub use error::{Error, Result};
