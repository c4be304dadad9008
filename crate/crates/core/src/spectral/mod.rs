//! Eigenstructure of `I + K` read off the SVD `K = U₁ Σ₁ V₁ᵀ`.
//!
//! Every eigenvalue of `I + K` other than 1 is `1 + γ` for an eigenvalue `γ`
//! of the `p × p` matrix `S = Σ₁ V₁ᵀ U₁`, with eigenvector `U₁ ξ`. The
//! eigenvalue 1 owns `R(V₂)`, and zero eigenvalues of `S` produce Jordan
//! chains of `I + K` at 1.

mod angles;
mod classify;
mod jordan;
mod report;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cluster_points, mean, null_space_c, spectral_norm, to_complex, CMatrix, ComplexSchur};
use crate::matgen::LowRankFactors;

pub use angles::{angle_to_v2, principal_angles};
pub use classify::{classify_eigenstructure, ClassifiedEigenpair, EigenClassification, EigenSource, JordanChain};
pub use jordan::jordan_chains;
pub use report::{
    sensitivity_report, SensitiveEigenvalue, SensitivityReason, SensitivityReport, Witness,
    DEFAULT_ANGLE_THRESHOLD, DEFAULT_KAPPA_THRESHOLD,
};

pub use classify::jordan_chains_gamma_zero;

/// Rank tolerance for the staircase at `γ = 0`, relative to `σ₁^k`.
pub const ZERO_RANK_TOL: f64 = 1e-10;
/// Nonzero `γ` closer than this (relative to `σ₁`) form one cluster.
pub const GAMMA_CLUSTER_TOL: f64 = 1e-6;

/// `K = U₁ Σ₁ V₁ᵀ` keeping singular values above `rank_tol·σ_max`.
pub fn svd_split(k: &DMatrix<f64>, rank_tol: f64) -> Result<LowRankFactors> {
    if !k.is_square() {
        return Err(Error::Dimension(format!("K must be square, got {:?}", k.shape())));
    }
    let n = k.nrows();
    if n == 0 {
        return Ok(LowRankFactors::empty(0, 0));
    }
    let svd = k.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    if smax == 0.0 {
        return Ok(LowRankFactors::empty(n, 0));
    }
    let keep: Vec<usize> = order.into_iter().filter(|&i| svd.singular_values[i] > rank_tol * smax).collect();
    let p = keep.len();
    let mut u1 = DMatrix::zeros(n, p);
    let mut v1 = DMatrix::zeros(n, p);
    let mut sigma1 = DVector::zeros(p);
    for (dst, &src) in keep.iter().enumerate() {
        u1.set_column(dst, &u.column(src));
        v1.set_column(dst, &vt.row(src).transpose());
        sigma1[dst] = svd.singular_values[src];
    }
    LowRankFactors::new(u1, sigma1, v1, 0)
}

/// SVD split of `W Ŝᵀ` without forming the `n × n` product.
pub fn svd_split_outer(w: &DMatrix<f64>, s: &DMatrix<f64>, rank_tol: f64) -> Result<LowRankFactors> {
    if w.shape() != s.shape() {
        return Err(Error::Dimension(format!("outer factors {:?} and {:?} differ", w.shape(), s.shape())));
    }
    let (n, k) = w.shape();
    if k == 0 {
        return Ok(LowRankFactors::empty(n, 0));
    }
    let qw = w.clone().qr();
    let qs = s.clone().qr();
    let core = qw.r() * qs.r().transpose();
    let inner = svd_split(&core, rank_tol)?;
    let u1 = qw.q() * &inner.u1;
    let v1 = qs.q() * &inner.v1;
    LowRankFactors::new(u1, inner.sigma1, v1, 0)
}

/// One distinct eigenvalue of `S` with its Jordan data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCluster {
    pub gamma: Complex64,
    pub multiplicity: usize,
    pub geometric: usize,
    /// Largest Jordan block.
    pub jordan_order: usize,
    /// Chains `ξ₁ … ξ_s` with `(S − γ) ξ₁ = 0`, `(S − γ) ξ_k = ξ_{k−1}`.
    pub chains: Vec<Vec<DVector<Complex64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedProblem {
    pub s: DMatrix<f64>,
    /// All `p` eigenvalues; the `ell` zero ones are exactly zero.
    pub gammas: Vec<Complex64>,
    pub ell: usize,
    pub diagonalizable: bool,
    pub clusters: Vec<GammaCluster>,
    /// Largest Jordan order per entry of `clusters`.
    pub jordan_orders: Vec<usize>,
}

impl ReducedProblem {
    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    pub fn zero_cluster(&self) -> Option<&GammaCluster> {
        self.clusters.iter().find(|c| c.gamma == Complex64::new(0.0, 0.0))
    }

    pub fn nonzero_clusters(&self) -> impl Iterator<Item = &GammaCluster> {
        self.clusters.iter().filter(|c| c.gamma != Complex64::new(0.0, 0.0))
    }

    pub fn reconstruction_error(&self, f: &LowRankFactors) -> f64 {
        (f.reduced_matrix() - &self.s).norm()
    }
}

/// Nested null spaces `W_k = null(N^k)` built as
/// `W_{k+1} = null(P_{W_k}^⊥ N)`, so only one factor of `N` is ever applied
/// and small nonzero eigenvalues are not pushed under the tolerance.
pub(crate) fn null_staircase(n: &CMatrix, scale: f64, cap: usize) -> Vec<CMatrix> {
    let p = n.nrows();
    let tol = ZERO_RANK_TOL * scale;
    let mut spaces: Vec<CMatrix> = Vec::new();
    let mut w = CMatrix::zeros(p, 0);
    for _ in 0..p {
        let projected = n - &w * (w.adjoint() * n);
        let next = null_space_c(&projected, tol);
        if next.ncols() <= w.ncols() {
            break;
        }
        w = next;
        spaces.push(w.clone());
        if w.ncols() >= cap {
            break;
        }
    }
    spaces
}

pub fn reduced_problem(f: &LowRankFactors) -> Result<ReducedProblem> {
    let p = f.p;
    let s = f.reduced_matrix();
    if p == 0 {
        return Ok(ReducedProblem { s, gammas: vec![], ell: 0, diagonalizable: true, clusters: vec![], jordan_orders: vec![] });
    }
    let scale = f.sigma_max().max(spectral_norm(&s));
    let sc = to_complex(&s);
    let mut gammas = ComplexSchur::new(&sc)?.eigenvalues();

    let zero_spaces = null_staircase(&sc, scale, p);
    let ell = zero_spaces.last().map_or(0, |w| w.ncols());
    gammas.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    for g in gammas.iter_mut().take(ell) {
        *g = Complex64::new(0.0, 0.0);
    }

    let mut clusters = Vec::new();
    if ell > 0 {
        let chains = jordan_chains(&sc, &zero_spaces);
        clusters.push(GammaCluster {
            gamma: Complex64::new(0.0, 0.0),
            multiplicity: ell,
            geometric: zero_spaces[0].ncols(),
            jordan_order: zero_spaces.len(),
            chains,
        });
    }
    let rest = &gammas[ell..];
    for group in cluster_points(rest, GAMMA_CLUSTER_TOL * scale) {
        let members: Vec<Complex64> = group.iter().map(|&i| rest[i]).collect();
        let gamma = mean(&members);
        let mult = members.len();
        let mut shifted = sc.clone();
        for i in 0..p {
            shifted[(i, i)] -= gamma;
        }
        let spaces = if mult == 1 { Vec::new() } else { null_staircase(&shifted, scale, mult) };
        let complete = spaces.last().is_some_and(|w| w.ncols() == mult);
        let (chains, jordan_order) = if complete {
            (jordan_chains(&shifted, &spaces), spaces.len())
        } else {
            // simple, or a cluster the tolerance cannot resolve: keep its
            // invariant subspace as eigenvector directions
            (crate::spectral::jordan::eigenvectors_only(&shifted, mult), 1)
        };
        clusters.push(GammaCluster {
            gamma,
            multiplicity: mult,
            geometric: chains.len(),
            jordan_order,
            chains,
        });
    }
    let diagonalizable = clusters.iter().all(|c| c.jordan_order == 1);
    let jordan_orders = clusters.iter().map(|c| c.jordan_order).collect();
    Ok(ReducedProblem { s, gammas, ell, diagonalizable, clusters, jordan_orders })
}
