//! Dense linear-algebra helpers shared by the analysis modules.
//!
//! Everything here is small-matrix machinery on top of `nalgebra`: seeded
//! random bases, null spaces and complements, and a reorderable complex
//! Schur form used for spectral projectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Deflation thresholds tried in turn; large clusters of equal eigenvalues
/// can stall the QR iteration at the tightest ones.
const SCHUR_EPS_LADDER: [f64; 6] = [1e-15, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10];
const SCHUR_MAX_ITER: usize = 3_000;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> CVector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn spectral_norm_c(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

pub fn smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().min()
}

/// Dot product in twice the working precision (compensated, Ogita-Rump-Oishi).
pub fn dot2(x: impl IntoIterator<Item = f64>, y: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in x.into_iter().zip(y) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + e;
        s = t;
    }
    s + c
}

/// `σ_min(A)` from the SVD singular vector, with `‖Av‖` re-evaluated by
/// compensated dot products. Accurate to a few ulps even when `κ(A)` is large.
pub fn refined_smallest_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    let v = vt.row(i);
    let vn = dot2(v.iter().copied(), v.iter().copied()).sqrt();
    let av: Vec<f64> = a.row_iter().map(|r| dot2(r.iter().copied(), v.iter().copied())).collect();
    dot2(av.iter().copied(), av.iter().copied()).sqrt() / vn
}

/// ChaCha8 stream for `(seed, stream)`. Distinct streams of one seed are
/// independent, so a single user seed can drive several draws.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix of i.i.d. standard normal entries, filled in column-major order.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(rows, cols, values)
}

pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `diag(R)` folded into `Q`).
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthonormal basis of the orthogonal complement of `R(v)` for `v` with
/// orthonormal columns.
pub fn orthonormal_complement(v: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = v.shape();
    if p == 0 {
        return DMatrix::identity(n, n);
    }
    let mut aug = DMatrix::zeros(n, n + p);
    aug.view_mut((0, 0), (n, p)).copy_from(v);
    aug.view_mut((0, p), (n, n)).fill_with_identity();
    let q = aug.qr().q();
    q.columns(p, n - p).into_owned()
}

pub fn orthonormal_complement_c(v: &CMatrix) -> CMatrix {
    let (n, p) = v.shape();
    if p == 0 {
        return CMatrix::identity(n, n);
    }
    let mut aug = CMatrix::zeros(n, n + p);
    aug.view_mut((0, 0), (n, p)).copy_from(v);
    aug.view_mut((0, p), (n, n)).fill_with_identity();
    let q = aug.qr().q();
    q.columns(p, n - p).into_owned()
}

/// Singular values and right singular vectors of `m`, sorted descending.
/// Wide inputs are padded with zero rows so that a full `V` is returned.
fn sorted_right_svd(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (rows, cols) = m.shape();
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v_full = vt.adjoint();
    let mut v = CMatrix::zeros(cols, order.len());
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &v_full.column(src));
    }
    (sv, v)
}

/// Orthonormal basis of the numerical null space `{x : ‖m x‖ ≤ tol}`.
pub fn null_space_c(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(cols, cols);
    }
    let (sv, v) = sorted_right_svd(m);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    v.columns(rank, cols - rank).into_owned()
}

/// Right singular vectors for the `k` smallest singular values.
pub fn smallest_right_singular_vectors(m: &CMatrix, k: usize) -> CMatrix {
    let cols = m.ncols();
    let (_, v) = sorted_right_svd(m);
    v.columns(cols - k, k).into_owned()
}

/// Orthonormal basis of the column space of `m`, dropping directions with
/// singular value at or below `tol`.
pub fn column_basis_c(m: &CMatrix, tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol)
        .collect();
    let mut basis = CMatrix::zeros(rows, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Angle between two nonzero complex vectors, in `[0, π/2]`.
pub fn vector_angle(x: &CVector, y: &CVector) -> f64 {
    let nx = x.norm();
    let ny = y.norm();
    let inner = x.dotc(y).norm() / (nx * ny);
    // sin from the component of y orthogonal to x keeps small angles accurate
    let xh = x / Complex64::new(nx, 0.0);
    let proj = &xh * xh.dotc(y);
    let sin = (y - proj).norm() / ny;
    sin.atan2(inner).clamp(0.0, std::f64::consts::FRAC_PI_2)
}

/// Complex Schur form `A = Q T Q*` that can be reordered in place.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl ComplexSchur {
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Dimension(format!(
                "Schur form needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        if n == 0 {
            return Ok(Self { q: CMatrix::zeros(0, 0), t: CMatrix::zeros(0, 0) });
        }
        let schur = SCHUR_EPS_LADDER
            .iter()
            .find_map(|&eps| a.clone().try_schur(eps, SCHUR_MAX_ITER))
            .ok_or_else(|| Error::Numerical("complex Schur iteration did not converge".into()))?;
        let (q, mut t) = schur.unpack();
        for j in 0..n {
            for i in (j + 1)..n {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Exchanges the diagonal entries at `k` and `k + 1` with one Givens
    /// rotation, keeping `A = Q T Q*`.
    pub fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let c = self.t[(k, k + 1)];
        let x0 = c;
        let x1 = b - a;
        let r = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
        if r == 0.0 {
            return;
        }
        let g00 = x0 / r;
        let g10 = x1 / r;
        let g01 = -g10.conj();
        let g11 = g00.conj();
        // rows k, k+1 <- G* rows
        for j in k..n {
            let r0 = self.t[(k, j)];
            let r1 = self.t[(k + 1, j)];
            self.t[(k, j)] = g00.conj() * r0 + g10.conj() * r1;
            self.t[(k + 1, j)] = g01.conj() * r0 + g11.conj() * r1;
        }
        // columns k, k+1 <- columns G
        for i in 0..=(k + 1) {
            let c0 = self.t[(i, k)];
            let c1 = self.t[(i, k + 1)];
            self.t[(i, k)] = c0 * g00 + c1 * g10;
            self.t[(i, k + 1)] = c0 * g01 + c1 * g11;
        }
        for i in 0..n {
            let c0 = self.q[(i, k)];
            let c1 = self.q[(i, k + 1)];
            self.q[(i, k)] = c0 * g00 + c1 * g10;
            self.q[(i, k + 1)] = c0 * g01 + c1 * g11;
        }
        self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
    }

    /// Moves the diagonal positions listed in `selected` to the leading
    /// block, preserving their relative order.
    pub fn move_to_front(&mut self, selected: &[usize]) {
        let mut positions: Vec<usize> = selected.to_vec();
        positions.sort_unstable();
        for (target, pos) in positions.into_iter().enumerate() {
            let mut current = pos;
            while current > target {
                self.swap(current - 1);
                current -= 1;
            }
        }
    }
}

/// Solves `T11 X − X T22 = C` for upper-triangular `T11`, `T22`.
pub fn solve_triangular_sylvester(t11: &CMatrix, t22: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut x = CMatrix::zeros(k, m);
    for j in 0..m {
        let mut rhs: CVector = c.column(j).into_owned();
        for i in 0..j {
            let coeff = t22[(i, j)];
            if coeff != Complex64::new(0.0, 0.0) {
                rhs.axpy(coeff, &x.column(i), Complex64::new(1.0, 0.0));
            }
        }
        let shift = t22[(j, j)];
        for row in (0..k).rev() {
            let mut acc = rhs[row];
            for col in (row + 1)..k {
                acc -= t11[(row, col)] * x[(col, j)];
            }
            let pivot = t11[(row, row)] - shift;
            if pivot.norm() == 0.0 {
                return Err(Error::Numerical(
                    "Sylvester equation is singular: blocks share an eigenvalue".into(),
                ));
            }
            x[(row, j)] = acc / pivot;
        }
    }
    Ok(x)
}

/// Eigenvalues of a real matrix through the complex Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    Ok(ComplexSchur::new(&to_complex(a))?.eigenvalues())
}

/// Single-linkage clustering of points in the complex plane.
pub fn cluster_points(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let ri = find(&mut parent, i);
                let rj = find(&mut parent, j);
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_index: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_index[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_index[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

pub fn mean(values: &[Complex64]) -> Complex64 {
    let sum: Complex64 = values.iter().sum();
    sum / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = seeded_rng(3, 0);
        let q = random_orthogonal(12, &mut rng);
        let err = (q.transpose() * &q - DMatrix::identity(12, 12)).norm();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn complement_spans_the_rest() {
        let mut rng = seeded_rng(5, 0);
        let q = random_orthogonal(9, &mut rng);
        let v = q.columns(0, 3).into_owned();
        let w = orthonormal_complement(&v);
        assert_eq!(w.shape(), (9, 6));
        assert!((v.transpose() * &w).norm() < 1e-13);
        assert!((w.transpose() * &w - DMatrix::identity(6, 6)).norm() < 1e-13);
    }

    #[test]
    fn schur_swap_keeps_similarity() {
        let mut rng = seeded_rng(11, 0);
        let a = to_complex(&gaussian_matrix(7, 7, &mut rng));
        let mut s = ComplexSchur::new(&a).unwrap();
        let before = s.eigenvalues();
        s.move_to_front(&[4, 6]);
        let recon = &s.q * &s.t * s.q.adjoint();
        assert!((recon - &a).norm() < 1e-11);
        assert!((s.t[(0, 0)] - before[4]).norm() < 1e-10);
        assert!((s.t[(1, 1)] - before[6]).norm() < 1e-10);
        for j in 0..7 {
            for i in (j + 1)..7 {
                assert_eq!(s.t[(i, j)], c64(0.0, 0.0));
            }
        }
    }

    #[test]
    fn sylvester_residual() {
        let t11 = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(3.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]);
        let t22 = CMatrix::from_row_slice(2, 2, &[c64(5.0, 1.0), c64(-1.0, 0.0), c64(0.0, 0.0), c64(-2.0, 0.0)]);
        let c = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 0.0)]);
        let x = solve_triangular_sylvester(&t11, &t22, &c).unwrap();
        assert!((&t11 * &x - &x * &t22 - c).norm() < 1e-13);
    }

    #[test]
    fn small_angles_are_resolved() {
        let x = CVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let y = CVector::from_vec(vec![c64(1.0, 0.0), c64(1e-9, 0.0)]);
        assert!((vector_angle(&x, &y) - 1e-9).abs() < 1e-20);
    }

    #[test]
    fn clustering_is_transitive() {
        let pts = [c64(0.0, 0.0), c64(0.5, 0.0), c64(1.0, 0.0), c64(5.0, 0.0)];
        let groups = cluster_points(&pts, 0.6);
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3]]);
    }
}
