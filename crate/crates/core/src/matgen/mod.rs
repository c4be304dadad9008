//! Test matrices of the form `I + K + E`.
//!
//! `K = U₁ Σ₁ V₁ᵀ` is built directly in SVD form so that its reduced matrix
//! `Σ₁ V₁ᵀ U₁` (whose eigenvalues `γ` give the non-unit eigenvalues `1 + γ`
//! of `I + K`) or the principal angles between `R(U₁)` and `R(V₂)` are
//! controlled exactly. `E` is Gaussian, rescaled to an exact spectral norm.

pub mod families;
pub mod io;

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    gaussian_matrix, gaussian_vector, null_space_c, orthonormal_complement, random_orthogonal,
    seeded_rng, spectral_norm, to_complex,
};

const STREAM_BASIS: u64 = 0;
const STREAM_PERTURBATION: u64 = 1;
const STREAM_RHS: u64 = 2;

/// SVD split of a rank-`p` matrix `K = U₁ diag(Σ₁) V₁ᵀ`. `V₂` is the
/// orthogonal complement of `V₁` and is materialized on demand.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub n: usize,
    pub p: usize,
    pub u1: DMatrix<f64>,
    pub sigma1: DVector<f64>,
    pub v1: DMatrix<f64>,
    pub seed: u64,
}

impl LowRankFactors {
    pub fn empty(n: usize, seed: u64) -> Self {
        Self {
            n,
            p: 0,
            u1: DMatrix::zeros(n, 0),
            sigma1: DVector::zeros(0),
            v1: DMatrix::zeros(n, 0),
            seed,
        }
    }

    /// Wraps precomputed factors after checking their invariants.
    pub fn new(u1: DMatrix<f64>, sigma1: DVector<f64>, v1: DMatrix<f64>, seed: u64) -> Result<Self> {
        let (n, p) = u1.shape();
        if v1.shape() != (n, p) || sigma1.len() != p {
            return Err(Error::Dimension(format!(
                "U1 is {}x{}, V1 is {}x{}, Sigma1 has {} entries",
                n,
                p,
                v1.nrows(),
                v1.ncols(),
                sigma1.len()
            )));
        }
        let f = Self { n, p, u1, sigma1, v1, seed };
        f.check_invariants()?;
        Ok(f)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.p > self.n {
            return Err(Error::InvalidArgument(format!("rank {} exceeds dimension {}", self.p, self.n)));
        }
        let orth = self.orthonormality_error();
        if orth > 1e-12 {
            return Err(Error::Numerical(format!("factor columns not orthonormal (error {orth:e})")));
        }
        for k in 0..self.p {
            if self.sigma1[k] <= 0.0 || !self.sigma1[k].is_finite() {
                return Err(Error::InvalidArgument("singular values must be positive".into()));
            }
            if k > 0 && self.sigma1[k] > self.sigma1[k - 1] {
                return Err(Error::InvalidArgument("singular values must be sorted descending".into()));
            }
        }
        Ok(())
    }

    /// Max of `‖U₁ᵀU₁ − I‖_F` and `‖V₁ᵀV₁ − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let eye = DMatrix::<f64>::identity(self.p, self.p);
        let eu = (self.u1.transpose() * &self.u1 - &eye).norm();
        let ev = (self.v1.transpose() * &self.v1 - &eye).norm();
        eu.max(ev)
    }

    pub fn k(&self) -> DMatrix<f64> {
        let mut us = self.u1.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.sigma1[j];
        }
        us * self.v1.transpose()
    }

    pub fn identity_plus_k(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n) + self.k()
    }

    pub fn v2(&self) -> DMatrix<f64> {
        orthonormal_complement(&self.v1)
    }

    /// `Σ₁ V₁ᵀ U₁`, the `p × p` matrix whose eigenvalues are the `γ`.
    pub fn reduced_matrix(&self) -> DMatrix<f64> {
        let mut s = self.v1.transpose() * &self.u1;
        for (i, mut row) in s.row_iter_mut().enumerate() {
            row *= self.sigma1[i];
        }
        s
    }

    pub fn sigma_max(&self) -> f64 {
        if self.p == 0 {
            0.0
        } else {
            self.sigma1[0]
        }
    }
}

/// Dense perturbation with exactly known spectral norm.
#[derive(Debug, Clone)]
pub struct PerturbationMatrix {
    pub n: usize,
    pub e: DMatrix<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub enum RhsMode {
    /// Standard normal entries normalized to unit 2-norm.
    RandomUnit,
    Ones,
    Given(DVector<f64>),
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: DMatrix<f64>,
    pub factors: LowRankFactors,
    pub perturbation: Option<PerturbationMatrix>,
    pub b: DVector<f64>,
    pub x0: DVector<f64>,
}

impl AssembledSystem {
    /// Relative Frobenius error of `A` against `I + U₁Σ₁V₁ᵀ + E`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut expect = self.factors.identity_plus_k();
        if let Some(p) = &self.perturbation {
            expect += &p.e;
        }
        (&self.a - &expect).norm() / expect.norm().max(f64::MIN_POSITIVE)
    }

    pub fn with_initial_guess(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.a.nrows() {
            return Err(Error::Dimension(format!(
                "initial guess has length {}, system has dimension {}",
                x0.len(),
                self.a.nrows()
            )));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn unperturbed(&self) -> DMatrix<f64> {
        self.factors.identity_plus_k()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= FRAC_PI_2 + 1e-15) {
        return Err(Error::InvalidArgument(format!("angle {theta} outside (0, pi/2]")));
    }
    Ok(())
}

enum Block {
    Real(usize),
    Pair(usize),
}

fn gamma_blocks(gammas: &[Complex64]) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < gammas.len() {
        let g = gammas[i];
        if g.im == 0.0 {
            blocks.push(Block::Real(i));
            i += 1;
        } else {
            let paired = gammas.get(i + 1).is_some_and(|h| *h == g.conj());
            if !paired {
                return Err(Error::InvalidArgument(format!(
                    "complex gamma {g} must be followed by its conjugate"
                )));
            }
            blocks.push(Block::Pair(i));
            i += 2;
        }
    }
    Ok(blocks)
}

/// Builds factors whose reduced matrix `Σ₁V₁ᵀU₁` has eigenvalues `gammas`.
///
/// `conditioning[j]` is the angle between the `j`-th eigenvector of the
/// reduced matrix and the coordinate axis of its predecessor; `π/2` keeps
/// it orthogonal and small angles make neighbouring eigenvectors nearly
/// parallel (ill-conditioned). An empty slice means all `π/2`. The first
/// entry is ignored.
///
/// With `S = X D X⁻¹` the requested reduced matrix, `K = U S Uᵀ + U N Zᵀ`
/// where `U`, `Z` are orthonormal and mutually orthogonal and `N` spans the
/// left null space of `S` (absent unless some `γ = 0`), which keeps
/// `rank(K) = p`.
pub fn build_from_gamma_spectrum(
    n: usize,
    gammas: &[Complex64],
    conditioning: &[f64],
    seed: u64,
) -> Result<LowRankFactors> {
    let p = gammas.len();
    if p > n {
        return Err(Error::InvalidArgument(format!("rank {p} exceeds dimension {n}")));
    }
    let blocks = gamma_blocks(gammas)?;
    let angles: Vec<f64> = if conditioning.is_empty() {
        vec![FRAC_PI_2; p]
    } else if conditioning.len() == p {
        conditioning.to_vec()
    } else {
        return Err(Error::InvalidArgument(format!(
            "{} conditioning angles for {} eigenvalues",
            conditioning.len(),
            p
        )));
    };
    for &a in &angles {
        check_angle(a)?;
    }
    if p == 0 {
        return Ok(LowRankFactors::empty(n, seed));
    }

    let mut d = DMatrix::<f64>::zeros(p, p);
    for block in &blocks {
        match *block {
            Block::Real(i) => d[(i, i)] = gammas[i].re,
            Block::Pair(i) => {
                let (a, b) = (gammas[i].re, gammas[i].im);
                d[(i, i)] = a;
                d[(i, i + 1)] = b;
                d[(i + 1, i)] = -b;
                d[(i + 1, i + 1)] = a;
            }
        }
    }
    let mut x = DMatrix::<f64>::identity(p, p);
    for j in 1..p {
        x[(j - 1, j)] = angles[j].cos();
        x[(j, j)] = angles[j].sin();
    }
    let x_inv = x
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("eigenvector basis is singular".into()))?;
    let s = &x * d * x_inv;

    let s_scale = spectral_norm(&s).max(1.0);
    let left_null = null_space_c(&to_complex(&s.transpose()), 1e-12 * s_scale);
    let ell0 = left_null.ncols();
    if p + ell0 > n {
        return Err(Error::InvalidArgument(format!(
            "zero eigenvalues need {} extra dimensions beyond rank {} (n = {})",
            ell0, p, n
        )));
    }

    let mut rng = seeded_rng(seed, STREAM_BASIS);
    let q = random_orthogonal(n, &mut rng);
    let basis = q.columns(0, p + ell0).into_owned();
    let u = q.columns(0, p).into_owned();

    // M = [S | N] with N a real basis of the left null space of S
    let mut m = DMatrix::<f64>::zeros(p, p + ell0);
    m.view_mut((0, 0), (p, p)).copy_from(&s);
    if ell0 > 0 {
        let n_real = real_basis(&left_null);
        m.view_mut((0, p), (p, ell0)).copy_from(&n_real);
    }

    let svd = m.svd(true, true);
    let w = svd.u.expect("requested U");
    let yt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut sigma1 = DVector::zeros(p);
    let mut w_sorted = DMatrix::zeros(p, p);
    let mut y_sorted = DMatrix::zeros(p + ell0, p);
    for (dst, &src) in order.iter().enumerate() {
        sigma1[dst] = svd.singular_values[src];
        w_sorted.set_column(dst, &w.column(src));
        y_sorted.set_column(dst, &yt.row(src).transpose());
    }
    if sigma1[p - 1] <= 1e-14 * sigma1[0] {
        return Err(Error::Numerical("constructed K is rank deficient".into()));
    }
    let u1 = &u * w_sorted;
    let v1 = &basis * y_sorted;
    let factors = LowRankFactors::new(u1, sigma1, v1, seed)?;
    verify_reduced_spectrum(&factors, gammas)?;
    Ok(factors)
}

/// Real orthonormal basis for the span of a complex basis of a real
/// subspace (left null spaces of real matrices).
fn real_basis(c: &crate::linalg::CMatrix) -> DMatrix<f64> {
    let (rows, cols) = c.shape();
    let mut stacked = DMatrix::<f64>::zeros(rows, 2 * cols);
    for j in 0..cols {
        for i in 0..rows {
            stacked[(i, 2 * j)] = c[(i, j)].re;
            stacked[(i, 2 * j + 1)] = c[(i, j)].im;
        }
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = DMatrix::zeros(rows, cols);
    for (dst, &src) in order.iter().take(cols).enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

/// Matches the eigenvalues of the reduced matrix against the request.
/// Zero eigenvalues may sit in Jordan blocks and split at `√u` scale, so
/// they are matched with a looser tolerance.
fn verify_reduced_spectrum(factors: &LowRankFactors, gammas: &[Complex64]) -> Result<()> {
    let s = factors.reduced_matrix();
    let scale = spectral_norm(&s).max(1.0);
    let mut computed: Vec<Complex64> = crate::linalg::eigenvalues(&s)?;
    for g in gammas {
        let tol = if *g == Complex64::new(0.0, 0.0) { 1e-6 * scale } else { 1e-8 * scale };
        let best = computed
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (c - g).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, dist)) if dist <= tol => {
                computed.swap_remove(i);
            }
            _ => {
                return Err(Error::Numerical(format!(
                    "reduced matrix does not reproduce requested eigenvalue {g}"
                )))
            }
        }
    }
    Ok(())
}

/// Factors with prescribed principal angles between `R(U₁)` and `R(V₂)`.
///
/// With an orthonormal `q₁..q₂ₚ`, `V₁ = [q₁..qₚ]` and the `i`-th column of
/// `U₁` is `sin θᵢ qᵢ + cos θᵢ qₚ₊ᵢ`, so `V₁ᵀU₁ = diag(sin θᵢ)` and the
/// reduced eigenvalues are `σᵢ sin θᵢ`.
pub fn build_with_principal_angles(
    n: usize,
    p: usize,
    angles: &[f64],
    sigmas: &[f64],
    seed: u64,
) -> Result<LowRankFactors> {
    if angles.len() != p || sigmas.len() != p {
        return Err(Error::InvalidArgument(format!(
            "expected {p} angles and singular values, got {} and {}",
            angles.len(),
            sigmas.len()
        )));
    }
    if 2 * p > n {
        return Err(Error::InvalidArgument(format!("2p = {} exceeds n = {}", 2 * p, n)));
    }
    for &a in angles {
        check_angle(a)?;
    }
    if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("singular values must be positive".into()));
    }
    if p == 0 {
        return Ok(LowRankFactors::empty(n, seed));
    }
    let mut rng = seeded_rng(seed, STREAM_BASIS);
    let q = random_orthogonal(n, &mut rng);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]));
    let mut u1 = DMatrix::zeros(n, p);
    let mut v1 = DMatrix::zeros(n, p);
    let mut sigma1 = DVector::zeros(p);
    for (dst, &src) in order.iter().enumerate() {
        let theta = angles[src];
        let col = q.column(dst) * theta.sin() + q.column(p + dst) * theta.cos();
        u1.set_column(dst, &col);
        v1.set_column(dst, &q.column(dst));
        sigma1[dst] = sigmas[src];
    }
    LowRankFactors::new(u1, sigma1, v1, seed)
}

/// Gaussian `n × n` matrix rescaled so that `‖E‖₂ = eps` exactly.
pub fn random_perturbation(n: usize, eps: f64, seed: u64) -> Result<PerturbationMatrix> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation norm {eps} must be >= 0")));
    }
    if eps >= 1.0 {
        return Err(Error::InvalidArgument(format!("perturbation norm {eps} must be < 1")));
    }
    if eps == 0.0 || n == 0 {
        return Ok(PerturbationMatrix { n, e: DMatrix::zeros(n, n), eps });
    }
    let mut rng = seeded_rng(seed, STREAM_PERTURBATION);
    let g = gaussian_matrix(n, n, &mut rng);
    let scale = eps / spectral_norm(&g);
    Ok(PerturbationMatrix { n, e: g * scale, eps })
}

pub fn assemble(
    factors: &LowRankFactors,
    perturbation: Option<&PerturbationMatrix>,
    rhs: RhsMode,
    seed: u64,
) -> Result<AssembledSystem> {
    let n = factors.n;
    let mut a = factors.identity_plus_k();
    if let Some(p) = perturbation {
        if p.e.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "perturbation is {}x{}, factors have n = {}",
                p.e.nrows(),
                p.e.ncols(),
                n
            )));
        }
        a += &p.e;
    }
    let b = match rhs {
        RhsMode::RandomUnit => {
            let mut rng = seeded_rng(seed, STREAM_RHS);
            let g = gaussian_vector(n, &mut rng);
            let norm = g.norm();
            g / norm
        }
        RhsMode::Ones => DVector::from_element(n, 1.0),
        RhsMode::Given(v) => {
            if v.len() != n {
                return Err(Error::Dimension(format!(
                    "right-hand side has length {}, system has dimension {}",
                    v.len(),
                    n
                )));
            }
            v
        }
    };
    Ok(AssembledSystem {
        a,
        factors: factors.clone(),
        perturbation: perturbation.cloned(),
        b,
        x0: DVector::zeros(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use std::f64::consts::PI;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn empty_spectrum_gives_identity() {
        let f = build_from_gamma_spectrum(25, &[], &[], 1).unwrap();
        assert_eq!(f.p, 0);
        let sys = assemble(&f, None, RhsMode::Ones, 0).unwrap();
        assert_eq!(sys.a, DMatrix::<f64>::identity(25, 25));
    }

    #[test]
    fn fig1_spectrum_from_gammas() {
        let f = build_from_gamma_spectrum(25, &[c64(0.25, 0.0), c64(11.25, 0.0)], &[], 7).unwrap();
        let eig = sorted_re(crate::linalg::eigenvalues(&f.identity_plus_k()).unwrap());
        for e in &eig[..23] {
            assert!((e - c64(1.0, 0.0)).norm() < 1e-10, "{e}");
        }
        assert!((eig[23] - c64(1.25, 0.0)).norm() < 1e-10);
        assert!((eig[24] - c64(12.25, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn ill_conditioned_pair_matches_dense_eigensolve() {
        let f = build_from_gamma_spectrum(25, &[c64(32.62, 0.0), c64(-30.62, 0.0)], &[FRAC_PI_2, 1e-3], 3)
            .unwrap();
        let eig = sorted_re(crate::linalg::eigenvalues(&f.identity_plus_k()).unwrap());
        assert!((eig[0] - c64(-29.62, 0.0)).norm() < 1e-8, "{}", eig[0]);
        assert!((eig[24] - c64(33.62, 0.0)).norm() < 1e-8, "{}", eig[24]);
        for e in &eig[1..24] {
            assert!((e - c64(1.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn complex_pairs_and_zero_gammas() {
        let g = [c64(2.0, 1.0), c64(2.0, -1.0), c64(0.0, 0.0), c64(-3.0, 0.0)];
        let f = build_from_gamma_spectrum(12, &g, &[], 4).unwrap();
        assert_eq!(f.p, 4);
        assert!(f.orthonormality_error() < 1e-12);
    }

    #[test]
    fn gamma_errors() {
        assert!(build_from_gamma_spectrum(1, &[c64(1.0, 0.0), c64(2.0, 0.0)], &[], 0).is_err());
        assert!(build_from_gamma_spectrum(5, &[c64(1.0, 1.0)], &[], 0).is_err());
        assert!(build_from_gamma_spectrum(5, &[c64(1.0, 0.0), c64(2.0, 0.0)], &[1.0, 0.0], 0).is_err());
    }

    #[test]
    fn orthogonal_angles_force_u1_equal_v1() {
        let f = build_with_principal_angles(25, 5, &[FRAC_PI_2; 5], &[1.0; 5], 1).unwrap();
        let cross = f.u1.transpose() * f.v2();
        assert!(cross.norm() < 1e-12);
    }

    #[test]
    fn principal_angle_errors() {
        assert!(build_with_principal_angles(5, 3, &[1.0; 3], &[1.0; 3], 0).is_err());
        assert!(build_with_principal_angles(10, 1, &[PI], &[1.0], 0).is_err());
        assert!(build_with_principal_angles(10, 1, &[0.0], &[1.0], 0).is_err());
    }

    #[test]
    fn perturbation_norm_is_exact() {
        for (n, eps, seed) in [(25, 10f64.powf(-3.5), 42), (50, 0.4, 9)] {
            let e = random_perturbation(n, eps, seed).unwrap();
            let sv = spectral_norm(&e.e);
            assert!((sv - eps).abs() <= 1e-12 * eps, "{sv} vs {eps}");
        }
        let z = random_perturbation(25, 0.0, 1).unwrap();
        assert_eq!(z.e, DMatrix::zeros(25, 25));
        assert!(random_perturbation(4, 1.0, 1).is_err());
        assert!(random_perturbation(4, -0.1, 1).is_err());
    }

    #[test]
    fn perturbation_is_seed_deterministic() {
        let a = random_perturbation(20, 0.3, 17).unwrap();
        let b = random_perturbation(20, 0.3, 17).unwrap();
        assert_eq!(a.e.as_slice(), b.e.as_slice());
    }

    #[test]
    fn assembled_system_reconstructs() {
        let f = build_from_gamma_spectrum(25, &[c64(0.25, 0.0), c64(11.25, 0.0)], &[], 7).unwrap();
        let e = random_perturbation(25, 1e-5, 3).unwrap();
        let sys = assemble(&f, Some(&e), RhsMode::RandomUnit, 11).unwrap();
        assert!(sys.reconstruction_error() <= 1e-12);
        assert!((sys.b.norm() - 1.0).abs() <= 1e-14);
        assert_eq!(sys.x0, DVector::zeros(25));
        let bad = random_perturbation(10, 1e-5, 3).unwrap();
        assert!(assemble(&f, Some(&bad), RhsMode::Ones, 0).is_err());
        assert!(assemble(&f, None, RhsMode::Given(DVector::zeros(3)), 0).is_err());
    }
}
