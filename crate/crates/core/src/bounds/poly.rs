use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{harmonic_ritz_roots, GmresTrace, ResidualPolynomial};
use crate::linalg::CVector;

/// `φ(z) = base(z)^M · tail(z)`.
///
/// Past the step `d` at which the unperturbed solve converged, the
/// residual polynomial of degree `m = M d + r` is taken as `ψ_d^M ψ_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePolynomial {
    pub base: ResidualPolynomial,
    pub power: u32,
    pub tail: ResidualPolynomial,
}

impl CompositePolynomial {
    pub fn power_of(base: ResidualPolynomial, power: u32) -> Self {
        Self { base, power, tail: ResidualPolynomial::one() }
    }

    /// `ψ_m` from an unperturbed trace, composite beyond convergence.
    pub fn from_trace(trace: &GmresTrace, m: usize) -> Result<Self> {
        let d = trace.converged_at.unwrap_or_else(|| trace.iterations());
        if d == 0 {
            return Err(Error::InvalidArgument("trace converged at step 0; no residual polynomial".into()));
        }
        if m <= d {
            return Ok(Self::power_of(harmonic_ritz_roots(trace, m)?, 1));
        }
        let base = harmonic_ritz_roots(trace, d)?;
        let tail = harmonic_ritz_roots(trace, m % d)?;
        Ok(Self { base, power: (m / d) as u32, tail })
    }

    pub fn degree(&self) -> usize {
        self.base.degree() * self.power as usize + self.tail.degree()
    }

    pub fn abs(&self, z: Complex64) -> f64 {
        let direct = self.base.abs_power(z, self.power) * self.tail.abs_power(z, 1);
        if direct.is_finite() && (direct > 0.0 || self.log_abs(z) == f64::NEG_INFINITY) {
            direct
        } else {
            self.log_abs(z).exp()
        }
    }

    pub fn log_abs(&self, z: Complex64) -> f64 {
        self.power as f64 * self.base.log_abs(z) + self.tail.log_abs(z)
    }

    pub fn apply(&self, a: &DMatrix<f64>, v: &DVector<f64>) -> CVector {
        let mut roots = self.tail.roots.clone();
        for _ in 0..self.power {
            roots.extend_from_slice(&self.base.roots);
        }
        ResidualPolynomial { roots }.apply(a, v)
    }
}
