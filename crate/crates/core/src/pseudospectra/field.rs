use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_basis_c, refined_smallest_singular_value, spectral_norm, to_complex, CMatrix};
use crate::matgen::LowRankFactors;

pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_range: [f64; 2], im_range: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        let g = Self { re_range, im_range, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square window of half-width `half` around `center`.
    pub fn centered(center: Complex64, half: f64, n: usize) -> Result<Self> {
        Self::new([center.re - half, center.re + half], [center.im - half, center.im + half], n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_GRID || self.ny < MIN_GRID {
            return Err(Error::InvalidArgument(format!(
                "grid {}x{} is below the minimum of {MIN_GRID}",
                self.nx, self.ny
            )));
        }
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok(self.re_range) || !ok(self.im_range) {
            return Err(Error::InvalidArgument("grid ranges must be finite and nondegenerate".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.re_range[1] - self.re_range[0]) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_range[1] - self.im_range[0]) / (self.ny - 1) as f64
    }

    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.re_range[0] + ix as f64 * self.dx(),
            self.im_range[0] + iy as f64 * self.dy(),
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_range[0] && z.re <= self.re_range[1] && z.im >= self.im_range[0] && z.im <= self.im_range[1]
    }

    /// Same window with twice the resolution per axis.
    pub fn refined(&self) -> Self {
        Self { nx: 2 * self.nx - 1, ny: 2 * self.ny - 1, ..self.clone() }
    }
}

/// `σ_min(zI − A)` sampled on a grid; `smin[(iy, ix)]`.
#[derive(Debug, Clone)]
pub struct PseudospectrumField {
    pub grid: GridSpec,
    pub smin: DMatrix<f64>,
}

impl PseudospectrumField {
    pub fn min(&self) -> f64 {
        self.smin.min()
    }

    pub fn max(&self) -> f64 {
        self.smin.max()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "re,im,smin")?;
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let z = self.grid.point(ix, iy);
                writeln!(out, "{:e},{:e},{:e}", z.re, z.im, self.smin[(iy, ix)])?;
            }
        }
        Ok(())
    }
}

fn smin_at(ac: &CMatrix, z: Complex64) -> f64 {
    let mut m = -ac.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += z;
    }
    m.singular_values().min()
}

/// Source of `σ_min(zI − A)` values.
#[derive(Debug, Clone)]
pub enum ResolventOperator {
    Dense(CMatrix),
    /// `A = I + K`. With `Q` an orthonormal basis of `R([U₁ V₁])`, the
    /// matrix `zI − A` is block diagonal in `[Q Q⊥]` with blocks
    /// `(z − 1)I − QᵀKQ` and `(z − 1)I`.
    IdentityPlusLowRank { core: CMatrix, has_complement: bool, n: usize },
}

impl ResolventOperator {
    pub fn dense(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Dimension(format!("resolvent needs a nonempty square matrix, got {:?}", a.shape())));
        }
        Ok(Self::Dense(to_complex(a)))
    }

    pub fn identity_plus_low_rank(f: &LowRankFactors) -> Result<Self> {
        if f.n == 0 {
            return Err(Error::Dimension("resolvent needs a nonempty matrix".into()));
        }
        let both = DMatrix::from_columns(
            &f.u1.column_iter().chain(f.v1.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
        );
        let q = column_basis_c(&to_complex(&both), 1e-12);
        let core = q.adjoint() * to_complex(&f.k()) * &q;
        Ok(Self::IdentityPlusLowRank { has_complement: q.ncols() < f.n, core, n: f.n })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(a) => a.nrows(),
            Self::IdentityPlusLowRank { n, .. } => *n,
        }
    }

    pub fn smin(&self, z: Complex64) -> f64 {
        match self {
            Self::Dense(a) => smin_at(a, z),
            Self::IdentityPlusLowRank { core, has_complement, .. } => {
                let w = z - 1.0;
                let inner = if core.nrows() == 0 { f64::INFINITY } else { smin_at(core, w) };
                if *has_complement {
                    inner.min(w.norm())
                } else {
                    inner
                }
            }
        }
    }
}

pub fn resolvent_field(a: &DMatrix<f64>, grid: &GridSpec) -> Result<PseudospectrumField> {
    resolvent_field_with(&ResolventOperator::dense(a)?, grid)
}

pub fn resolvent_field_with(op: &ResolventOperator, grid: &GridSpec) -> Result<PseudospectrumField> {
    grid.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| op.smin(grid.point(k % nx, k / nx)))
        .collect();
    let smin = DMatrix::from_row_slice(ny, nx, &values);
    Ok(PseudospectrumField { grid: grid.clone(), smin })
}

/// `σ_min(A)`: the largest δ whose pseudospectrum excludes the origin.
pub fn delta0(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::Dimension(format!("delta0 needs a nonempty square matrix, got {:?}", a.shape())));
    }
    let smin = refined_smallest_singular_value(a);
    if smin <= f64::EPSILON * spectral_norm(a) * a.nrows() as f64 {
        return Err(Error::EmptyRange(format!("matrix is numerically singular (sigma_min = {smin:e})")));
    }
    Ok(smin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, seeded_rng};
    use nalgebra::DVector;

    #[test]
    fn delta0_accurate_when_ill_conditioned() {
        let f = crate::matgen::families::example1(crate::matgen::families::DEFAULT_SEED).unwrap();
        #[allow(clippy::excessive_precision)]
        let reference = 0.01574814404427001509305;
        let d = delta0(&f.identity_plus_k()).unwrap();
        assert!((d - reference).abs() / reference < 1e-14, "{d}");
    }

    #[test]
    fn shifted_identity() {
        let a = DMatrix::<f64>::identity(5, 5);
        let ac = to_complex(&a);
        assert!((smin_at(&ac, Complex64::new(1.01, 0.0)) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn identity_minimum_near_one() {
        let a = DMatrix::<f64>::identity(3, 3);
        let grid = GridSpec::new([0.0, 2.0], [-1.0, 1.0], 21, 21).unwrap();
        let f = resolvent_field(&a, &grid).unwrap();
        let (mut best, mut at) = (f64::INFINITY, (0, 0));
        for iy in 0..21 {
            for ix in 0..21 {
                if f.smin[(iy, ix)] < best {
                    best = f.smin[(iy, ix)];
                    at = (ix, iy);
                }
            }
        }
        assert_eq!(at, (10, 10));
        assert!(f.min() < 1e-12);
    }

    #[test]
    fn random_points_match_svd() {
        let mut rng = seeded_rng(5, 0);
        let a = gaussian_matrix(10, 10, &mut rng);
        let grid = GridSpec::new([-2.0, 2.0], [-1.0, 1.5], 16, 17).unwrap();
        let f = resolvent_field(&a, &grid).unwrap();
        for &(ix, iy) in &[(0, 0), (3, 7), (15, 16), (8, 2), (11, 11)] {
            let z = grid.point(ix, iy);
            let mut m = -to_complex(&a);
            for i in 0..10 {
                m[(i, i)] += z;
            }
            let oracle = m.svd(false, false).singular_values.min();
            assert!((f.smin[(iy, ix)] - oracle).abs() <= 1e-10 * oracle);
        }
    }

    #[test]
    fn low_rank_operator_matches_dense() {
        let f = crate::matgen::build_with_principal_angles(20, 3, &[1e-3, 0.4, 1.3], &[5.0, 2.0, 0.5], 3).unwrap();
        let a = f.identity_plus_k();
        let dense = ResolventOperator::dense(&a).unwrap();
        let fast = ResolventOperator::identity_plus_low_rank(&f).unwrap();
        for z in [Complex64::new(1.0, 0.0), Complex64::new(1.3, 0.2), Complex64::new(-2.0, 1.0), Complex64::new(6.0, -0.5)] {
            let (d, l) = (dense.smin(z), fast.smin(z));
            assert!((d - l).abs() <= 1e-12 * a.norm(), "{z}: {d} vs {l}");
        }
    }

    #[test]
    fn delta0_examples() {
        assert_eq!(delta0(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
        assert!((delta0(&d).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(delta0(&DMatrix::zeros(2, 2)), Err(Error::EmptyRange(_))));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new([0.0, 1.0], [0.0, 1.0], 8, 32).is_err());
        assert!(GridSpec::new([1.0, 1.0], [0.0, 1.0], 32, 32).is_err());
        let g = GridSpec::new([0.0, 1.0], [0.0, 1.0], 17, 17).unwrap();
        assert_eq!(g.refined().nx, 33);
        assert!((g.refined().dx() - g.dx() / 2.0).abs() < 1e-15);
    }
}
