//! Preconditioned Broyden iteration on a nonlinear convection–diffusion
//! problem: each step solves a system of the form `I + K + E` with
//! `rank(K)` equal to the step index.

mod broyden;
mod estimate;
mod ilut;
mod linesearch;
mod problem;

pub use broyden::{broyden_solve, perturbation_action, BroydenOptions, BroydenStep, BroydenTrace};
pub use estimate::estimate_perturbation_norm;
pub use ilut::{ilut, FillStats, IlutFactors, IlutOptions};
pub use linesearch::{line_search, parabolic_step, LineSearchResult, ARMIJO_ALPHA, MAX_REDUCTIONS};
pub use problem::{discretize, discretize_with, exact_solution, forcing, DiscreteProblem, CONVECTION};

/// Drop tolerance used for the model problem.
pub const DEFAULT_DROPTOL: f64 = 1e-4;
