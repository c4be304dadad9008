//! Convergence analysis of GMRES for coefficient matrices of the form
//! `I + K + E`, where `K` has low rank `p` and `E` is small in norm.
//!
//! The crate is organized by subsystem:
//!
//! - [`matgen`]: test matrices with controlled spectra, principal angles and
//!   perturbation norms.
//! - [`krylov`]: full GMRES with trace capture, harmonic-Ritz residual
//!   polynomials and minimal polynomials.
//! - [`pseudospectra`]: resolvent-norm grids, level-set contours, eigenvalue
//!   condition numbers and the small-`δ` disk model.
//! - [`bounds`]: pseudospectral residual bounds for the perturbed system.
//! - [`spectral`]: eigenstructure of `I + K` derived from the SVD of `K`.
//! - [`pde`]: the preconditioned Broyden experiment on a nonlinear
//!   convection-diffusion problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod matgen;
pub mod pde;
pub mod pseudospectra;
pub mod spectral;

pub use error::{Error, Result};
pub use krylov::{
    eval_residual_poly, gmres_solve, harmonic_ritz_roots, kelley_kevrekidis_constant,
    minimal_polynomial, GmresOptions, GmresStatus, GmresTrace, LinearOperator, MinimalPolynomial,
    ResidualPolynomial, TolMode,
};
pub use matgen::{AssembledSystem, LowRankFactors, PerturbationMatrix, RhsMode};
pub use pseudospectra::{ContourSet, EigConditioning, GridSpec, PseudospectrumField};
pub use spectral::{ReducedProblem, SensitivityReport};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
