use std::f64::consts::PI;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// Convection coefficient in `−Δu + (1 + u)(c u_x + c u_y) = f`.
pub const CONVECTION: f64 = 70.0;

/// Finite-difference model problem on the unit square with zero Dirichlet data.
///
/// Unknown `(i, j)`, `1 ≤ i, j ≤ N − 1`, sits at `(i h, j h)` and has
/// index `(j − 1)(N − 1) + (i − 1)`.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub mesh: usize,
    pub n: usize,
    pub h: f64,
    pub convection: f64,
    pub a_diff: CsrMatrix<f64>,
    pub dx: CsrMatrix<f64>,
    pub dy: CsrMatrix<f64>,
    /// `c (Dx + Dy)`.
    pub conv: CsrMatrix<f64>,
    pub f: DVector<f64>,
    pub u_exact: DVector<f64>,
}

pub fn discretize(mesh: usize) -> Result<DiscreteProblem> {
    discretize_with(mesh, CONVECTION)
}

pub fn discretize_with(mesh: usize, convection: f64) -> Result<DiscreteProblem> {
    if mesh < 4 {
        return Err(Error::InvalidArgument(format!("mesh parameter N = {mesh} must be at least 4")));
    }
    if !convection.is_finite() {
        return Err(Error::InvalidArgument("convection coefficient must be finite".into()));
    }
    let m = mesh - 1;
    let n = m * m;
    let h = 1.0 / mesh as f64;
    let idx = |i: usize, j: usize| (j - 1) * m + (i - 1);
    let mut a = CooMatrix::new(n, n);
    let mut dx = CooMatrix::new(n, n);
    let mut dy = CooMatrix::new(n, n);
    let (h2, h2inv) = (1.0 / (h * h), 0.5 / h);
    for j in 1..mesh {
        for i in 1..mesh {
            let row = idx(i, j);
            a.push(row, row, 4.0 * h2);
            if i > 1 {
                a.push(row, idx(i - 1, j), -h2);
                dx.push(row, idx(i - 1, j), -h2inv);
            }
            if i < m {
                a.push(row, idx(i + 1, j), -h2);
                dx.push(row, idx(i + 1, j), h2inv);
            }
            if j > 1 {
                a.push(row, idx(i, j - 1), -h2);
                dy.push(row, idx(i, j - 1), -h2inv);
            }
            if j < m {
                a.push(row, idx(i, j + 1), -h2);
                dy.push(row, idx(i, j + 1), h2inv);
            }
        }
    }
    let a_diff = CsrMatrix::from(&a);
    let dx = CsrMatrix::from(&dx);
    let dy = CsrMatrix::from(&dy);
    let conv = (&dx + &dy) * convection;
    let mut f = DVector::zeros(n);
    let mut u_exact = DVector::zeros(n);
    for j in 1..mesh {
        for i in 1..mesh {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let k = idx(i, j);
            u_exact[k] = exact_solution(x, y);
            f[k] = forcing(x, y, convection);
        }
    }
    Ok(DiscreteProblem { mesh, n, h, convection, a_diff, dx, dy, conv, f, u_exact })
}

/// `u(x, y) = y sin(πy) (1 − x) sin(πx) e^{4x}`.
pub fn exact_solution(x: f64, y: f64) -> f64 {
    let (q, _, _) = x_factor(x);
    let (g, _, _) = y_factor(y);
    q * g
}

/// `−Δu + (1 + u)(c u_x + c u_y)` for the exact solution.
pub fn forcing(x: f64, y: f64, convection: f64) -> f64 {
    let (q, q1, q2) = x_factor(x);
    let (g, g1, g2) = y_factor(y);
    let u = q * g;
    -(q2 * g + q * g2) + (1.0 + u) * convection * (q1 * g + q * g1)
}

fn x_factor(x: f64) -> (f64, f64, f64) {
    let (s, c) = (PI * x).sin_cos();
    let e = (4.0 * x).exp();
    let w = -s + PI * (1.0 - x) * c + 4.0 * (1.0 - x) * s;
    let dw = -2.0 * PI * c - PI * PI * (1.0 - x) * s - 4.0 * s + 4.0 * PI * (1.0 - x) * c;
    ((1.0 - x) * s * e, e * w, e * (4.0 * w + dw))
}

fn y_factor(y: f64) -> (f64, f64, f64) {
    let (s, c) = (PI * y).sin_cos();
    (y * s, s + PI * y * c, 2.0 * PI * c - PI * PI * y * s)
}

pub(crate) fn spmv(a: &CsrMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        out[i] = row.col_indices().iter().zip(row.values()).map(|(&j, &x)| x * v[j]).sum();
    }
    out
}

impl DiscreteProblem {
    /// `F(u) = A u + (I + D(u)) c (Dx + Dy) u − f`.
    pub fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        let cu = spmv(&self.conv, u);
        let mut out = spmv(&self.a_diff, u) - &self.f;
        for k in 0..self.n {
            out[k] += (1.0 + u[k]) * cu[k];
        }
        Ok(out)
    }

    /// `J(u) = A + D(c (Dx + Dy) u) + (I + D(u)) c (Dx + Dy)`.
    pub fn jacobian(&self, u: &DVector<f64>) -> Result<CsrMatrix<f64>> {
        self.check_len(u)?;
        let cu = spmv(&self.conv, u);
        let mut scaled = self.conv.clone();
        let offsets = scaled.row_offsets().to_vec();
        let values = scaled.values_mut();
        for i in 0..self.n {
            for v in &mut values[offsets[i]..offsets[i + 1]] {
                *v *= 1.0 + u[i];
            }
        }
        let diag = CsrMatrix::from(&{
            let mut d = CooMatrix::new(self.n, self.n);
            for (i, &x) in cu.iter().enumerate() {
                d.push(i, i, x);
            }
            d
        });
        Ok(&(&self.a_diff + &scaled) + &diag)
    }

    /// `J(0) = A + c (Dx + Dy)`.
    pub fn jacobian0(&self) -> CsrMatrix<f64> {
        &self.a_diff + &self.conv
    }

    /// `‖F(u_exact)‖_∞`, the truncation error of the scheme.
    pub fn truncation_error(&self) -> f64 {
        self.residual(&self.u_exact).expect("own length").amax()
    }

    fn check_len(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::Dimension(format!("vector has length {}, problem has {} unknowns", u.len(), self.n)));
        }
        Ok(())
    }
}
