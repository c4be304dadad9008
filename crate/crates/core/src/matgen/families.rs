//! The three example families used throughout the experiments.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{build_from_gamma_spectrum, build_with_principal_angles, LowRankFactors};
use crate::error::Result;

pub const N: usize = 25;

/// Perturbation norms of the rank-2 experiment.
pub const FIG1_EPS: [f64; 2] = [1e-5, 3.1622776601683794e-4];
pub const EXAMPLE1_EPS: [f64; 2] = [1e-3, 1e-1];
pub const EXAMPLE2_EPS: [f64; 2] = [1e-5, 1e-2];

pub const DEFAULT_SEED: u64 = 2024;

/// Rank 2, spectrum `{1 (x23), 1.25, 12.25}`.
///
/// Built through principal angles: each non-unit eigenvalue `1 + σᵢ sin θᵢ`
/// has condition number `1 / sin θᵢ`. The defaults give `κ ≈ (6, 6, 1.2)`
/// for `λ = (1, 1.25, 12.25)`.
pub fn fig1(seed: u64) -> Result<LowRankFactors> {
    fig1_with_kappas(6.0, 1.2, seed)
}

pub fn fig1_with_kappas(kappa_small: f64, kappa_large: f64, seed: u64) -> Result<LowRankFactors> {
    let angles = [(1.0 / kappa_large).asin(), (1.0 / kappa_small).asin()];
    let sigmas = [11.25 * kappa_large, 0.25 * kappa_small];
    build_with_principal_angles(N, 2, &angles, &sigmas, seed)
}

pub const EXAMPLE1_ANGLE: f64 = 1e-3;

/// Rank 5 with reduced block `[[1, 1000], [1, 1]] ⊕ I₃`-type spectrum
/// `γ = {1 ± √1000, 1, 1, 1}` and a nearly parallel eigenvector pair.
pub fn example1(seed: u64) -> Result<LowRankFactors> {
    let root = 1000f64.sqrt();
    let gammas = [
        Complex64::new(1.0 + root, 0.0),
        Complex64::new(1.0 - root, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let angles = [FRAC_PI_2, EXAMPLE1_ANGLE, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2];
    build_from_gamma_spectrum(N, &gammas, &angles, seed)
}

pub const EXAMPLE2_SMALL_ANGLE: f64 = 1e-5;
pub const EXAMPLE2_SIGMAS: [f64; 5] = [5.0, 4.0, 3.0, 2.0, 1.0];

/// Rank 5 with two principal angles of `1e-5` between `R(U₁)` and `R(V₂)`.
pub fn example2(seed: u64) -> Result<LowRankFactors> {
    let t = EXAMPLE2_SMALL_ANGLE;
    let angles = [t, t, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2];
    build_with_principal_angles(N, 5, &angles, &EXAMPLE2_SIGMAS, seed)
}
