use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gmres::GmresTrace;
use crate::error::{Error, Result};
use crate::linalg::{to_complex, CMatrix, CVector, ComplexSchur};

/// `ψ(z) = ∏ (1 − z/θ_j)`, stored by its roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPolynomial {
    pub roots: Vec<Complex64>,
}

impl ResidualPolynomial {
    pub fn new(roots: Vec<Complex64>) -> Result<Self> {
        if let Some(r) = roots.iter().find(|r| r.norm() == 0.0 || !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("residual polynomial root {r} is not allowed")));
        }
        Ok(Self { roots })
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        Self { roots: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.roots.iter().fold(Complex64::new(1.0, 0.0), |acc, &t| acc * (1.0 - z / t))
    }

    /// `ln |ψ(z)|`, `-inf` at a root.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        self.roots.iter().map(|&t| (1.0 - z / t).norm().ln()).sum()
    }

    /// `|ψ(z)|^M`, falling back to logarithms when the direct product
    /// leaves the floating-point range.
    pub fn abs_power(&self, z: Complex64, power: u32) -> f64 {
        let modulus: f64 = self.roots.iter().map(|&t| (1.0 - z / t).norm()).product();
        let direct = modulus.powi(power as i32);
        if modulus == 0.0 || (direct.is_normal() && modulus.is_normal()) {
            direct
        } else {
            (power as f64 * self.log_abs(z)).exp()
        }
    }

    pub fn eval_power(&self, z: Complex64, power: u32) -> Complex64 {
        let arg: f64 = self.roots.iter().map(|&t| (1.0 - z / t).arg()).sum();
        Complex64::from_polar(self.abs_power(z, power), power as f64 * arg)
    }

    /// `ψ^M` as an explicit polynomial.
    pub fn pow(&self, power: u32) -> Self {
        let mut roots = Vec::with_capacity(self.roots.len() * power as usize);
        for _ in 0..power {
            roots.extend_from_slice(&self.roots);
        }
        Self { roots }
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut roots = self.roots.clone();
        roots.extend_from_slice(&other.roots);
        Self { roots }
    }

    /// `ψ(A) v`, one linear factor at a time.
    pub fn apply(&self, a: &DMatrix<f64>, v: &DVector<f64>) -> CVector {
        let ac = to_complex(a);
        let mut w: CVector = v.map(|x| Complex64::new(x, 0.0));
        for &t in &self.roots {
            let aw = &ac * &w;
            w -= aw / t;
        }
        w
    }
}

/// Roots of `ψ_m` are the eigenvalues of `H_m + h²_{m+1,m} H_m^{-T} e_m e_mᵀ`.
pub fn harmonic_ritz_roots(trace: &GmresTrace, m: usize) -> Result<ResidualPolynomial> {
    let m_final = trace.iterations();
    if m > m_final {
        return Err(Error::InvalidArgument(format!("step {m} exceeds the {m_final} recorded steps")));
    }
    if m == 0 {
        return Ok(ResidualPolynomial::one());
    }
    if trace.residual_norms[m] >= trace.residual_norms[m - 1] {
        return Err(Error::Stagnation(m));
    }
    let hm = trace.hessenberg.view((0, 0), (m, m)).into_owned();
    let hnext = trace.hessenberg[(m, m - 1)];
    let mut em = DVector::zeros(m);
    em[m - 1] = 1.0;
    let f = hm.transpose().lu().solve(&em).ok_or(Error::Stagnation(m))?;
    if !f.iter().all(|x| x.is_finite()) {
        return Err(Error::Stagnation(m));
    }
    let mut g = hm;
    for i in 0..m {
        g[(i, m - 1)] += hnext * hnext * f[i];
    }
    let roots = ComplexSchur::new(&to_complex(&g))?.eigenvalues();
    ResidualPolynomial::new(roots).map_err(|_| Error::Stagnation(m))
}

pub fn eval_residual_poly(poly: &ResidualPolynomial, z: Complex64, power: u32) -> Complex64 {
    poly.eval_power(z, power)
}

/// `μ(z) = 1 + Σ β_k z^k`, also kept in factored form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalPolynomial {
    pub betas: Vec<Complex64>,
    pub factors: Vec<(Complex64, usize)>,
}

impl MinimalPolynomial {
    pub fn degree(&self) -> usize {
        self.betas.len()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in self.betas.iter().rev() {
            acc = (acc + b) * z;
        }
        acc + 1.0
    }

    /// `μ(A)` from the factored form.
    pub fn matrix(&self, a: &DMatrix<f64>) -> CMatrix {
        let n = a.nrows();
        let ac = to_complex(a);
        let eye = CMatrix::identity(n, n);
        let mut out = eye.clone();
        for &(lambda, s) in &self.factors {
            let f = &eye - &ac / lambda;
            for _ in 0..s {
                out = &out * &f;
            }
        }
        out
    }
}

/// Expand `∏ (1 − z/λ_j)^{s_j}`.
pub fn minimal_polynomial(spectrum: &[(Complex64, usize)]) -> Result<MinimalPolynomial> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &(lambda, s) in spectrum {
        if lambda.norm() <= 1e-14 {
            return Err(Error::InvalidArgument(format!("eigenvalue {lambda} at the origin")));
        }
        for _ in 0..s {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c / lambda;
            }
            coeffs = next;
        }
    }
    Ok(MinimalPolynomial {
        betas: coeffs[1..].to_vec(),
        factors: spectrum.iter().filter(|(_, s)| *s > 0).copied().collect(),
    })
}

/// Leading term `Σ k |β_k| ‖I+K‖^{k−1}`.
pub fn kelley_kevrekidis_constant(poly: &MinimalPolynomial, norm_ik: f64) -> f64 {
    poly.betas
        .iter()
        .enumerate()
        .map(|(i, b)| (i + 1) as f64 * b.norm() * norm_ik.powi(i as i32))
        .sum()
}
