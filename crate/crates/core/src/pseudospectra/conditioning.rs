use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cluster_points, mean, numerical_rank, solve_triangular_sylvester, spectral_norm, spectral_norm_c, to_complex, CMatrix, ComplexSchur};

pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

/// Spectral-projector norms of the distinct eigenvalue clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigConditioning {
    pub eigenvalues: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// `f64::INFINITY` for defective clusters.
    pub kappas: Vec<f64>,
    pub defective: Vec<bool>,
}

impl EigConditioning {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn any_defective(&self) -> bool {
        self.defective.iter().any(|&d| d)
    }

    pub fn kappa_sum(&self) -> f64 {
        self.kappas.iter().sum()
    }

    /// Index of the cluster nearest to `z`.
    pub fn nearest(&self, z: Complex64) -> Option<usize> {
        (0..self.len()).min_by(|&i, &j| {
            (self.eigenvalues[i] - z).norm().total_cmp(&(self.eigenvalues[j] - z).norm())
        })
    }
}

/// `group_tol` is relative to `‖A‖₂`; `None` uses the default `1e-8`.
pub fn eigen_condition_numbers(a: &DMatrix<f64>, group_tol: Option<f64>) -> Result<EigConditioning> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::Dimension(format!("eigenvalue conditioning needs a nonempty square matrix, got {:?}", a.shape())));
    }
    let n = a.nrows();
    let norm = spectral_norm(a);
    let tol = group_tol.unwrap_or(DEFAULT_GROUP_TOL) * norm;
    let schur = ComplexSchur::new(&to_complex(a))?;
    let eigs = schur.eigenvalues();
    let groups = cluster_points(&eigs, tol);

    let mut out = EigConditioning {
        eigenvalues: Vec::with_capacity(groups.len()),
        multiplicities: Vec::with_capacity(groups.len()),
        kappas: Vec::with_capacity(groups.len()),
        defective: Vec::with_capacity(groups.len()),
    };
    for group in &groups {
        let members: Vec<Complex64> = group.iter().map(|&i| eigs[i]).collect();
        let centre = mean(&members);
        let k = group.len();
        let mut s = schur.clone();
        s.move_to_front(group);
        let t11 = s.t.view((0, 0), (k, k)).into_owned();
        let mut shifted = t11.clone();
        for i in 0..k {
            shifted[(i, i)] -= centre;
        }
        let defective = k > 1 && numerical_rank(&shifted, tol) > 0;
        let kappa = if defective {
            f64::INFINITY
        } else if k == n {
            1.0
        } else {
            let t22 = s.t.view((k, k), (n - k, n - k)).into_owned();
            let t12: CMatrix = s.t.view((0, k), (k, n - k)).into_owned();
            let x = solve_triangular_sylvester(&t11, &t22, &t12)?;
            let nx = spectral_norm_c(&x);
            (1.0 + nx * nx).sqrt()
        };
        out.eigenvalues.push(centre);
        out.multiplicities.push(k);
        out.kappas.push(kappa);
        out.defective.push(defective);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn circumference(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.radius
    }

    /// `n` equally spaced boundary points.
    pub fn boundary(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| self.center + Complex64::from_polar(self.radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect()
    }
}

/// Disks of radius `κ_j δ` about each eigenvalue.
pub fn asymptotic_disks(cond: &EigConditioning, delta: f64) -> Result<Vec<Disk>> {
    if cond.any_defective() {
        return Err(Error::Defective("disk model needs finite condition numbers".into()));
    }
    Ok(cond
        .eigenvalues
        .iter()
        .zip(&cond.kappas)
        .map(|(&center, &k)| Disk { center, radius: k * delta })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, seeded_rng};

    #[test]
    fn symmetric_is_perfectly_conditioned() {
        let mut rng = seeded_rng(9, 0);
        let g = gaussian_matrix(8, 8, &mut rng);
        let a = &g + g.transpose();
        let c = eigen_condition_numbers(&a, None).unwrap();
        assert_eq!(c.len(), 8);
        for k in &c.kappas {
            assert!((k - 1.0).abs() < 1e-8, "{k}");
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let c = eigen_condition_numbers(&a, None).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.defective[0]);
        assert!(c.kappas[0].is_infinite());
        assert!(asymptotic_disks(&c, 0.1).is_err());
    }

    #[test]
    fn upper_triangular_closed_form() {
        let m = 100.0;
        let a = DMatrix::from_row_slice(2, 2, &[1.0, m, 0.0, 2.0]);
        let c = eigen_condition_numbers(&a, None).unwrap();
        let expected = (1.0 + m * m).sqrt();
        for k in &c.kappas {
            assert!((k - expected).abs() <= 1e-6 * expected);
        }
    }

    #[test]
    fn semisimple_cluster_is_not_defective() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, 3.0]));
        let c = eigen_condition_numbers(&a, None).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.multiplicities.iter().sum::<usize>(), 4);
        assert!(!c.any_defective());
        let disks = asymptotic_disks(&c, 0.1).unwrap();
        for d in disks {
            assert!((d.radius - 0.1).abs() < 1e-12);
        }
    }
}
