use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::angles::{angle_to_v2, principal_angles};
use super::classify::jordan_chains_gamma_zero;
use super::ReducedProblem;
use crate::error::Result;
use crate::linalg::{smallest_right_singular_vectors, to_complex, vector_angle, CMatrix, CVector};
use crate::matgen::LowRankFactors;
use crate::pseudospectra::eigen_condition_numbers;

pub const DEFAULT_KAPPA_THRESHOLD: f64 = 1e2;
pub const DEFAULT_ANGLE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityReason {
    DefectiveUnit,
    ReducedNondiagonalizable,
    SmallAngleWithinU1Eigenvectors,
    SmallAngleToV2OrChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub reason: SensitivityReason,
    /// An angle in radians, or a chain residual for defectivity.
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveEigenvalue {
    pub lambda: Complex64,
    /// `None` when the eigenvalue is defective.
    pub kappa: Option<f64>,
    /// `‖ξ‖‖η‖ / |η* V₁ᵀU₁ ξ|` from the reduced problem, for simple `γ`.
    pub reduced_kappa: Option<f64>,
    pub reasons: Vec<SensitivityReason>,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub sensitive: Vec<SensitiveEigenvalue>,
    pub angles: Vec<f64>,
    pub kappa_threshold: f64,
    pub angle_threshold: f64,
    pub p: usize,
    /// Condition number of the `λ = 1` cluster, which is not itself listed.
    pub unit_kappa: Option<f64>,
}

impl SensitivityReport {
    pub fn count(&self) -> usize {
        self.sensitive.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// `‖ξ‖‖η‖ / |η* V₁ᵀU₁ ξ|` with `η` a left eigenvector of `V₁ᵀU₁Σ₁`.
fn reduced_kappa(f: &LowRankFactors, gamma: Complex64, xi: &CVector) -> f64 {
    let p = f.p;
    let w = to_complex(&(f.v1.transpose() * &f.u1));
    let mut m = w.clone();
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= Complex64::new(f.sigma1[j], 0.0);
    }
    let shifted = m.adjoint() - CMatrix::identity(p, p) * gamma.conj();
    let eta = smallest_right_singular_vectors(&shifted, 1).column(0).into_owned();
    let denom = eta.dotc(&(&w * xi)).norm();
    xi.norm() * eta.norm() / denom
}

struct Candidate {
    lambda: Complex64,
    cluster: usize,
    vectors: Vec<CVector>,
    jordan_order: usize,
    simple_xi: Option<CVector>,
}

pub fn sensitivity_report(
    a: &DMatrix<f64>,
    f: &LowRankFactors,
    r: &ReducedProblem,
    kappa_threshold: f64,
    angle_threshold: f64,
) -> Result<SensitivityReport> {
    let angles = principal_angles(f);
    let mut report = SensitivityReport {
        sensitive: Vec::new(),
        angles,
        kappa_threshold,
        angle_threshold,
        p: f.p,
        unit_kappa: None,
    };
    if f.p == 0 {
        return Ok(report);
    }
    let cond = eigen_condition_numbers(a, None)?;
    let one = Complex64::new(1.0, 0.0);
    let unit = cond.nearest(one).filter(|&j| (cond.eigenvalues[j] - one).norm() <= 1e-6 * a.norm().max(1.0));
    if let Some(j) = unit {
        report.unit_kappa = finite(cond.kappas[j]);
    }

    let u1 = to_complex(&f.u1);
    let candidates: Vec<Candidate> = r
        .nonzero_clusters()
        .enumerate()
        .map(|(i, c)| Candidate {
            lambda: one + c.gamma,
            cluster: i,
            vectors: c.chains.iter().map(|chain| &u1 * &chain[0]).collect(),
            jordan_order: c.jordan_order,
            simple_xi: (c.multiplicity == 1).then(|| c.chains[0][0].clone()),
        })
        .collect();
    let chains = jordan_chains_gamma_zero(f, r)?;
    let tails: Vec<&CVector> = chains.iter().map(|c| c.vectors.last().expect("nonempty chain")).collect();

    for cand in &candidates {
        let kappa = if cand.jordan_order > 1 {
            f64::INFINITY
        } else {
            cond.nearest(cand.lambda).map_or(f64::INFINITY, |j| cond.kappas[j])
        };
        let mut witnesses = Vec::new();
        if cand.jordan_order > 1 {
            witnesses.push(Witness {
                reason: SensitivityReason::ReducedNondiagonalizable,
                value: cand.jordan_order as f64,
                detail: format!("Jordan block of order {} at gamma = {}", cand.jordan_order, cand.lambda - one),
            });
        }
        let within = candidates
            .iter()
            .filter(|o| o.cluster != cand.cluster)
            .flat_map(|o| o.vectors.iter())
            .flat_map(|y| cand.vectors.iter().map(move |x| vector_angle(x, y)))
            .fold(f64::INFINITY, f64::min);
        let to_v2 = cand.vectors.iter().map(|x| angle_to_v2(f, x)).fold(f64::INFINITY, f64::min);
        let to_chain = tails
            .iter()
            .flat_map(|t| cand.vectors.iter().map(move |x| vector_angle(x, t)))
            .fold(f64::INFINITY, f64::min);
        let within_w = Witness {
            reason: SensitivityReason::SmallAngleWithinU1Eigenvectors,
            value: within,
            detail: "smallest angle to another lifted eigenvector".into(),
        };
        let (side, side_name) = if to_chain < to_v2 { (to_chain, "a chain tail V1 Sigma1^-1 xi") } else { (to_v2, "R(V2)") };
        let side_w = Witness {
            reason: SensitivityReason::SmallAngleToV2OrChain,
            value: side,
            detail: format!("angle to {side_name}"),
        };
        let flagged = !kappa.is_finite() || kappa > kappa_threshold;
        if !flagged {
            continue;
        }
        let mut angle_hits: Vec<Witness> = [within_w.clone(), side_w.clone()]
            .into_iter()
            .filter(|w| w.value < angle_threshold)
            .collect();
        if angle_hits.is_empty() && witnesses.is_empty() {
            angle_hits.push(if within <= side { within_w } else { side_w });
        }
        witnesses.extend(angle_hits);
        let reasons = witnesses.iter().map(|w| w.reason).collect();
        report.sensitive.push(SensitiveEigenvalue {
            lambda: cand.lambda,
            kappa: finite(kappa),
            reduced_kappa: cand.simple_xi.as_ref().map(|xi| reduced_kappa(f, cand.lambda - one, xi)),
            reasons,
            witnesses,
        });
    }

    if let (Some(chain), true) = (chains.iter().max_by_key(|c| c.len()), r.ell > 0) {
        let n = a.nrows();
        let shifted = to_complex(a) - CMatrix::identity(n, n);
        let tail = chain.vectors.last().expect("nonempty chain");
        let mut v = tail.clone();
        for _ in 0..chain.len() - 1 {
            v = &shifted * v;
        }
        report.sensitive.push(SensitiveEigenvalue {
            lambda: one,
            kappa: None,
            reduced_kappa: None,
            reasons: vec![SensitivityReason::DefectiveUnit],
            witnesses: vec![Witness {
                reason: SensitivityReason::DefectiveUnit,
                value: v.norm() / tail.norm(),
                detail: format!("relative norm of (A - I)^{} applied to the chain tail", chain.len() - 1),
            }],
        });
    }
    debug_assert!(report.sensitive.len() <= 2 * f.p);
    Ok(report)
}
