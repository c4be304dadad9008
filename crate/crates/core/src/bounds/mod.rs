//! Pseudospectral bounds on the GMRES residual for `I + K + E`.
//!
//! For `‖E‖₂ = ε < δ` every degree-`m` polynomial `φ` with `φ(0) = 1`
//! satisfies `‖φ(A+E) b‖ ≤ ‖φ(A) b‖ + ε C_m(δ)` with
//! `C_m(δ) = L_δ ‖b‖ / (π δ²) · max_{∂σ_δ(A)} |φ|`, so the perturbed GMRES
//! residual at step `m` obeys the same bound.

mod context;
mod poly;

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::ResidualPolynomial;
use crate::pseudospectra::{ContourSet, EigConditioning};

pub use context::{BoundContext, REFINE_TOL};
pub use poly::CompositePolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// `‖ρ_m‖ + ε C_m`.
    Eq4,
    /// `ε C_m` once the unperturbed residual vanishes.
    Eq6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub m: usize,
    pub delta: f64,
    pub eps: f64,
    pub l_delta: f64,
    pub sup_psi: f64,
    pub c_m: f64,
    pub bound_total: f64,
    pub mode: BoundMode,
    /// Power `M` of the base polynomial.
    pub power: u32,
    pub b_norm: f64,
    pub rho_m: Option<f64>,
    pub vertices: usize,
}

impl BoundEvaluation {
    /// Fills in `eps`, the unperturbed residual and the total bound.
    pub fn with_residual(mut self, rho_m: Option<f64>, eps: f64) -> Result<Self> {
        self.bound_total = residual_bound(rho_m, eps, &self)?;
        self.eps = eps;
        self.rho_m = rho_m;
        self.mode = if rho_m.is_some() { BoundMode::Eq4 } else { BoundMode::Eq6 };
        Ok(self)
    }
}

/// `C_m(δ)` for `φ = base^M · tail` on a precomputed contour set.
pub fn compute_cm_composite(
    b_norm: f64,
    poly: &CompositePolynomial,
    delta: f64,
    contours: &ContourSet,
) -> Result<BoundEvaluation> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    if (contours.delta - delta).abs() > 1e-12 * delta {
        return Err(Error::InvalidArgument(format!(
            "contours were extracted at delta {:e}, not {delta:e}",
            contours.delta
        )));
    }
    if contours.is_empty() {
        return Err(Error::InvalidArgument("empty contour set".into()));
    }
    let sup_psi = contours.vertices().map(|z| poly.abs(z)).fold(0.0, f64::max);
    let l_delta = contours.total_arc_length;
    let c_m = l_delta * b_norm / (std::f64::consts::PI * delta * delta) * sup_psi;
    if !(c_m > 0.0) || !c_m.is_finite() {
        return Err(Error::Numerical(format!("C_m = {c_m:e} is not a positive finite number")));
    }
    Ok(BoundEvaluation {
        m: poly.degree(),
        delta,
        eps: 0.0,
        l_delta,
        sup_psi,
        c_m,
        bound_total: f64::NAN,
        mode: BoundMode::Eq6,
        power: poly.power,
        b_norm,
        rho_m: None,
        vertices: contours.vertex_count(),
    })
}

/// `C_m(δ)` for `ψ^M`.
pub fn compute_cm(
    b_norm: f64,
    poly: &ResidualPolynomial,
    power: u32,
    delta: f64,
    contours: &ContourSet,
) -> Result<BoundEvaluation> {
    compute_cm_composite(b_norm, &CompositePolynomial::power_of(poly.clone(), power), delta, contours)
}

/// `‖ρ_m‖ + ε C_m` when `rho_m` is given, else `ε C_m`.
pub fn residual_bound(rho_m: Option<f64>, eps: f64, cm: &BoundEvaluation) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be nonnegative")));
    }
    if eps >= cm.delta {
        return Err(Error::BoundHypothesis(format!(
            "eps = {eps:e} is not below delta = {:e}",
            cm.delta
        )));
    }
    Ok(rho_m.unwrap_or(0.0) + eps * cm.c_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticBound {
    pub value: f64,
    pub prefactor: f64,
    pub sup_psi: f64,
    /// Some disks `|z − λ_j| ≤ κ_j δ` intersect; the model is then crude.
    pub overlapping: bool,
}

/// `2 ε Σκ_j ‖b‖ / δ · max_{j,θ} |φ(λ_j + κ_j δ e^{iθ})|`.
pub fn asymptotic_bound(
    cond: &EigConditioning,
    poly: &CompositePolynomial,
    eps: f64,
    delta: f64,
    b_norm: f64,
    n_theta: usize,
) -> Result<AsymptoticBound> {
    if cond.any_defective() {
        return Err(Error::Defective("asymptotic bound needs finite condition numbers".into()));
    }
    if n_theta == 0 {
        return Err(Error::InvalidArgument("n_theta must be positive".into()));
    }
    let k = cond.len();
    let mut overlapping = false;
    for i in 0..k {
        for j in (i + 1)..k {
            let gap = (cond.eigenvalues[i] - cond.eigenvalues[j]).norm();
            if gap < (cond.kappas[i] + cond.kappas[j]) * delta {
                overlapping = true;
            }
        }
    }
    let mut sup_psi: f64 = 0.0;
    for (lambda, kappa) in cond.eigenvalues.iter().zip(&cond.kappas) {
        for t in 0..n_theta {
            let theta = 2.0 * std::f64::consts::PI * t as f64 / n_theta as f64;
            let z = lambda + Complex64::from_polar(kappa * delta, theta);
            sup_psi = sup_psi.max(poly.abs(z));
        }
    }
    let prefactor = 2.0 * eps * cond.kappa_sum() * b_norm / delta;
    Ok(AsymptoticBound { value: prefactor * sup_psi, prefactor, sup_psi, overlapping })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub evaluations: Vec<BoundEvaluation>,
    pub best: usize,
}

impl DeltaSweep {
    pub fn best(&self) -> &BoundEvaluation {
        &self.evaluations[self.best]
    }
}

/// One refined evaluation per `δ`, all sharing `ε` and `ρ_m`.
pub fn sweep_delta(
    ctx: &BoundContext,
    b_norm: f64,
    poly: &CompositePolynomial,
    eps: f64,
    rho_m: Option<f64>,
    deltas: &[f64],
) -> Result<DeltaSweep> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no delta values supplied".into()));
    }
    if eps >= ctx.delta0 {
        return Err(Error::EmptyRange(format!(
            "eps = {eps:e} is not below delta0 = {:e}; no admissible delta",
            ctx.delta0
        )));
    }
    if let Some(bad) = deltas.iter().find(|&&d| !(d > eps && d < ctx.delta0)) {
        return Err(Error::EmptyRange(format!(
            "delta = {bad:e} outside ({eps:e}, {:e})",
            ctx.delta0
        )));
    }
    let evaluations: Vec<BoundEvaluation> = deltas
        .par_iter()
        .map(|&d| ctx.refined_cm(b_norm, poly, d)?.with_residual(rho_m, eps))
        .collect::<Result<_>>()?;
    let best = (0..evaluations.len())
        .min_by(|&i, &j| evaluations[i].bound_total.total_cmp(&evaluations[j].bound_total))
        .expect("nonempty sweep");
    Ok(DeltaSweep { evaluations, best })
}

pub fn write_bounds_csv<W: Write>(mut out: W, evaluations: &[BoundEvaluation]) -> std::io::Result<()> {
    writeln!(out, "m,delta,C_m,bound_total")?;
    for e in evaluations {
        writeln!(out, "{},{:e},{:e},{:e}", e.m, e.delta, e.c_m, e.bound_total)?;
    }
    Ok(())
}

/// `‖φ(A) b‖` evaluated factor by factor.
pub fn unperturbed_residual(a: &DMatrix<f64>, b: &nalgebra::DVector<f64>, poly: &CompositePolynomial) -> f64 {
    poly.apply(a, b).norm()
}

#[cfg(test)]
mod tests;
