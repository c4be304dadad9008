//! Full GMRES with trace capture and the polynomials that describe it.

mod gmres;
mod poly;

pub use gmres::{
    gmres_solve, FnOperator, GmresOptions, GmresStatus, GmresTrace, LinearOperator, TolMode,
};
pub use poly::{
    eval_residual_poly, harmonic_ritz_roots, kelley_kevrekidis_constant, minimal_polynomial,
    MinimalPolynomial, ResidualPolynomial,
};
