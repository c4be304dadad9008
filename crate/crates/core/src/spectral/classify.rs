use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ReducedProblem;
use crate::error::{Error, Result};
use crate::linalg::{column_basis_c, orthonormal_complement_c, to_complex, CMatrix, CVector};
use crate::matgen::LowRankFactors;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenSource {
    /// `λ = 1` with eigenvector in `R(V₂)`.
    UnitBulk,
    /// `λ = 1 + γ`, `γ ≠ 0`, vector `U₁ ξ`.
    Lifted,
    /// Generalized eigenvector of order ≥ 2 at `λ = 1`.
    DefectiveUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedEigenpair {
    pub lambda: Complex64,
    pub source: EigenSource,
    pub vector: CVector,
    /// Generalized-eigenvector order; 1 for eigenvectors.
    pub order: usize,
}

/// Jordan chain of `I + K` at `λ = 1`: `(A − I) v₀ = 0`,
/// `(A − I) v_k = v_{k−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanChain {
    pub lambda: Complex64,
    pub vectors: Vec<CVector>,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest violation of the chain relations, each relative to the
    /// vector it should reproduce (absolute for the head).
    pub fn relation_error(&self, a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let shifted = to_complex(a) - CMatrix::identity(n, n) * self.lambda;
        let mut worst = (&shifted * &self.vectors[0]).norm();
        for k in 1..self.vectors.len() {
            let r = (&shifted * &self.vectors[k] - &self.vectors[k - 1]).norm() / self.vectors[k - 1].norm();
            worst = worst.max(r);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenClassification {
    pub pairs: Vec<ClassifiedEigenpair>,
    pub chains: Vec<JordanChain>,
    pub unit_bulk: usize,
    pub lifted: usize,
    pub defective_unit: usize,
    /// `n − p`, the dimension of `R(V₂)`.
    pub unit_eigenspace_dim: usize,
}

impl EigenClassification {
    pub fn total(&self) -> usize {
        self.pairs.len()
    }
}

fn lift(u1: &CMatrix, xi: &CVector) -> CVector {
    u1 * xi
}

fn check_consistent(f: &LowRankFactors, r: &ReducedProblem) -> Result<()> {
    if r.p() != f.p {
        return Err(Error::Dimension(format!("reduced problem has size {}, factors have rank {}", r.p(), f.p)));
    }
    let err = r.reconstruction_error(f);
    if err > 1e-10 * f.sigma_max().max(1.0) {
        return Err(Error::InvalidArgument(format!("reduced matrix does not match the factors (error {err:e})")));
    }
    Ok(())
}

/// Chains at `γ = 0`: `U₁ξ₁, …, U₁ξ_s, V₁Σ₁⁻¹ξ_s`.
pub fn jordan_chains_gamma_zero(f: &LowRankFactors, r: &ReducedProblem) -> Result<Vec<JordanChain>> {
    check_consistent(f, r)?;
    let Some(zero) = r.zero_cluster() else {
        return Ok(Vec::new());
    };
    let u1 = to_complex(&f.u1);
    let mut v1s = f.v1.clone();
    for (j, mut col) in v1s.column_iter_mut().enumerate() {
        col /= f.sigma1[j];
    }
    let v1s = to_complex(&v1s);
    Ok(zero
        .chains
        .iter()
        .map(|xi| {
            let mut vectors: Vec<CVector> = xi.iter().map(|x| lift(&u1, x)).collect();
            vectors.push(&v1s * xi.last().expect("nonempty chain"));
            JordanChain { lambda: Complex64::new(1.0, 0.0), vectors }
        })
        .collect())
}

pub fn classify_eigenstructure(f: &LowRankFactors, r: &ReducedProblem) -> Result<EigenClassification> {
    check_consistent(f, r)?;
    let n = f.n;
    let u1 = to_complex(&f.u1);
    let one = Complex64::new(1.0, 0.0);
    let mut pairs = Vec::with_capacity(n);

    for cluster in r.nonzero_clusters() {
        for chain in &cluster.chains {
            for (k, xi) in chain.iter().enumerate() {
                pairs.push(ClassifiedEigenpair {
                    lambda: one + cluster.gamma,
                    source: EigenSource::Lifted,
                    vector: lift(&u1, xi),
                    order: k + 1,
                });
            }
        }
    }
    let lifted = pairs.len();

    let chains = jordan_chains_gamma_zero(f, r)?;
    let mut heads = Vec::new();
    let mut defective_unit = 0;
    for chain in &chains {
        heads.push(chain.vectors[0].clone());
        for (k, v) in chain.vectors.iter().enumerate() {
            let source = if k == 0 { EigenSource::UnitBulk } else { EigenSource::DefectiveUnit };
            if k > 0 {
                defective_unit += 1;
            }
            pairs.push(ClassifiedEigenpair { lambda: one, source, vector: v.clone(), order: k + 1 });
        }
    }

    let v2 = to_complex(&f.v2());
    let complement = if heads.is_empty() {
        CMatrix::identity(v2.ncols(), v2.ncols())
    } else {
        let coords: Vec<CVector> = heads.iter().map(|h| v2.adjoint() * h).collect();
        let basis = column_basis_c(&CMatrix::from_columns(&coords), 1e-8);
        orthonormal_complement_c(&basis)
    };
    let bulk = &v2 * complement;
    for col in bulk.column_iter() {
        pairs.push(ClassifiedEigenpair { lambda: one, source: EigenSource::UnitBulk, vector: col.into_owned(), order: 1 });
    }
    let unit_bulk = pairs.iter().filter(|p| p.source == EigenSource::UnitBulk).count();

    Ok(EigenClassification { pairs, chains, unit_bulk, lifted, defective_unit, unit_eigenspace_dim: v2.ncols() })
}
