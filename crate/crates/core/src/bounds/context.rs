use nalgebra::DMatrix;

use super::{compute_cm_composite, BoundEvaluation, CompositePolynomial};
use crate::error::Result;
use crate::linalg::spectral_norm;
use crate::matgen::LowRankFactors;
use crate::pseudospectra::{
    auto_contours, delta0, eigen_condition_numbers, AutoContourOptions, ContourSet, EigConditioning,
    ResolventOperator,
};

/// Relative change in `C_m` below which grid refinement stops.
pub const REFINE_TOL: f64 = 0.01;

const MAX_REFINED_RESOLUTION: usize = 257;

/// Everything about `A` that bound evaluation needs repeatedly.
#[derive(Debug, Clone)]
pub struct BoundContext {
    pub a: DMatrix<f64>,
    pub op: ResolventOperator,
    pub cond: EigConditioning,
    pub norm_a: f64,
    pub delta0: f64,
    pub contour_options: AutoContourOptions,
}

impl BoundContext {
    pub fn dense(a: &DMatrix<f64>) -> Result<Self> {
        Self::build(a.clone(), ResolventOperator::dense(a)?)
    }

    pub fn identity_plus_low_rank(f: &LowRankFactors) -> Result<Self> {
        Self::build(f.identity_plus_k(), ResolventOperator::identity_plus_low_rank(f)?)
    }

    fn build(a: DMatrix<f64>, op: ResolventOperator) -> Result<Self> {
        let cond = eigen_condition_numbers(&a, None)?;
        let norm_a = spectral_norm(&a);
        let delta0 = delta0(&a)?;
        Ok(Self { a, op, cond, norm_a, delta0, contour_options: AutoContourOptions::default() })
    }

    pub fn contours(&self, delta: f64, resolution: usize) -> Result<ContourSet> {
        let opts = AutoContourOptions { resolution, ..self.contour_options.clone() };
        auto_contours(&self.op, self.norm_a, delta, &self.cond, &opts)
    }

    /// `C_m(δ)` with the grid refined until it moves by less than `REFINE_TOL`.
    pub fn refined_cm(&self, b_norm: f64, poly: &CompositePolynomial, delta: f64) -> Result<BoundEvaluation> {
        let mut resolution = self.contour_options.resolution;
        let mut current = compute_cm_composite(b_norm, poly, delta, &self.contours(delta, resolution)?)?;
        while resolution < MAX_REFINED_RESOLUTION {
            resolution = 2 * resolution - 1;
            let next = compute_cm_composite(b_norm, poly, delta, &self.contours(delta, resolution)?)?;
            let change = (next.c_m - current.c_m).abs() / next.c_m;
            current = next;
            if change < REFINE_TOL {
                break;
            }
        }
        Ok(current)
    }
}
