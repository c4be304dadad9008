use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakdown when the new Arnoldi direction is this small relative to
/// `‖A v_j‖`.
const BREAKDOWN_TOL: f64 = 1e-14;
/// Residual at an exact breakdown must be this small relative to `‖r_0‖`.
const EXACT_TERMINATION_TOL: f64 = 1e-10;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
}

/// Matrix-free operator from a closure.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TolMode {
    /// Stop when `‖r_m‖ ≤ τ ‖r_0‖`.
    Relative,
    /// Stop when `‖r_m‖ ≤ τ`.
    Absolute,
}

#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub tol: f64,
    pub maxit: usize,
    pub mode: TolMode,
    pub keep_iterates: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-10, maxit: 100, mode: TolMode::Relative, keep_iterates: false }
    }
}

impl GmresOptions {
    pub fn absolute(tol: f64, maxit: usize) -> Self {
        Self { tol, maxit, mode: TolMode::Absolute, keep_iterates: false }
    }

    pub fn relative(tol: f64, maxit: usize) -> Self {
        Self { tol, maxit, mode: TolMode::Relative, keep_iterates: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GmresStatus {
    Converged,
    /// The Krylov space became invariant with a negligible residual.
    ExactTermination,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct GmresTrace {
    /// `‖r_m‖₂` for `m = 0..=m_final`, from the least-squares recurrence.
    pub residual_norms: Vec<f64>,
    pub iterates: Option<Vec<DVector<f64>>>,
    /// Orthonormal Krylov basis `v_0, v_1, …`.
    pub basis: Vec<DVector<f64>>,
    /// Unrotated `(m_final + 1) × m_final` Hessenberg matrix.
    pub hessenberg: DMatrix<f64>,
    pub converged_at: Option<usize>,
    pub status: GmresStatus,
    pub tol: f64,
    pub mode: TolMode,
    pub rhs_norm: f64,
    pub r0_norm: f64,
    /// Final iterate.
    pub x: DVector<f64>,
    /// `‖b − A x‖₂` recomputed for the final iterate.
    pub explicit_residual: f64,
}

impl GmresTrace {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len() - 1
    }

    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    /// Gap between recomputed and recurrence residuals, relative to `‖r_0‖`.
    pub fn residual_gap(&self) -> f64 {
        let last = *self.residual_norms.last().expect("trace holds r_0");
        (self.explicit_residual - last).abs() / self.r0_norm.max(f64::MIN_POSITIVE)
    }

    /// `[v_0 … v_{m-1}]`.
    pub fn basis_matrix(&self, m: usize) -> DMatrix<f64> {
        let n = self.basis.first().map_or(0, |v| v.len());
        let mut v = DMatrix::zeros(n, m);
        for (j, col) in self.basis.iter().take(m).enumerate() {
            v.set_column(j, col);
        }
        v
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,residual_norm")?;
        for (m, r) in self.residual_norms.iter().enumerate() {
            writeln!(out, "{m},{r:e}")?;
        }
        Ok(())
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn back_substitute(r: &DMatrix<f64>, g: &[f64], m: usize) -> DVector<f64> {
    let mut y = DVector::zeros(m);
    for i in (0..m).rev() {
        let mut acc = g[i];
        for k in (i + 1)..m {
            acc -= r[(i, k)] * y[k];
        }
        y[i] = acc / r[(i, i)];
    }
    y
}

fn iterate(x0: &DVector<f64>, basis: &[DVector<f64>], r: &DMatrix<f64>, g: &[f64], m: usize) -> DVector<f64> {
    let y = back_substitute(r, g, m);
    let mut x = x0.clone();
    for j in 0..m {
        x.axpy(y[j], &basis[j], 1.0);
    }
    x
}

/// Unrestarted GMRES with modified Gram–Schmidt Arnoldi (one extra pass
/// when the norm drops by more than `1/√2`).
pub fn gmres_solve<A: LinearOperator + ?Sized>(
    op: &A,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    opts: &GmresOptions,
) -> Result<GmresTrace> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(Error::Dimension(format!(
            "operator has dimension {}, b has {}, x0 has {}",
            n,
            b.len(),
            x0.len()
        )));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
    }

    let rhs_norm = b.norm();
    let r0 = b - op.apply(x0);
    let beta = r0.norm();
    let threshold = match opts.mode {
        TolMode::Relative => opts.tol * beta,
        TolMode::Absolute => opts.tol,
    };
    // full GMRES cannot take more than n steps
    let maxit = opts.maxit.min(n);

    let mut residual_norms = vec![beta];
    let mut iterates = opts.keep_iterates.then(|| vec![x0.clone()]);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(maxit + 1);
    let mut h = DMatrix::<f64>::zeros(maxit + 1, maxit);
    let mut rmat = DMatrix::<f64>::zeros(maxit + 1, maxit);
    let mut cs = vec![0.0; maxit];
    let mut sn = vec![0.0; maxit];
    let mut g = vec![0.0; maxit + 1];

    let mut converged_at = if beta <= threshold { Some(0) } else { None };
    let mut status = GmresStatus::MaxIterations;
    let mut steps = 0;

    if beta == 0.0 {
        status = GmresStatus::ExactTermination;
    } else if converged_at.is_some() {
        status = GmresStatus::Converged;
    } else {
        basis.push(&r0 / beta);
        g[0] = beta;
        for j in 0..maxit {
            let mut w = op.apply(&basis[j]);
            let norm_before = w.norm();
            for i in 0..=j {
                let hij = basis[i].dot(&w);
                w.axpy(-hij, &basis[i], 1.0);
                h[(i, j)] = hij;
            }
            if w.norm() < norm_before / std::f64::consts::SQRT_2 {
                for i in 0..=j {
                    let c = basis[i].dot(&w);
                    w.axpy(-c, &basis[i], 1.0);
                    h[(i, j)] += c;
                }
            }
            let hnext = w.norm();
            h[(j + 1, j)] = hnext;

            for i in 0..=(j + 1) {
                rmat[(i, j)] = h[(i, j)];
            }
            for i in 0..j {
                let a = rmat[(i, j)];
                let bb = rmat[(i + 1, j)];
                rmat[(i, j)] = cs[i] * a + sn[i] * bb;
                rmat[(i + 1, j)] = -sn[i] * a + cs[i] * bb;
            }
            if rmat[(j, j)].hypot(rmat[(j + 1, j)]) <= BREAKDOWN_TOL * norm_before {
                // A v_j adds nothing new: A is singular on the Krylov space
                return Err(Error::Breakdown { step: j + 1, residual: g[j].abs() });
            }
            let (c, s) = givens(rmat[(j, j)], rmat[(j + 1, j)]);
            cs[j] = c;
            sn[j] = s;
            rmat[(j, j)] = c * rmat[(j, j)] + s * rmat[(j + 1, j)];
            rmat[(j + 1, j)] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;

            let res = g[j + 1].abs();
            residual_norms.push(res);
            steps = j + 1;
            if let Some(list) = iterates.as_mut() {
                list.push(iterate(x0, &basis, &rmat, &g, steps));
            }
            if converged_at.is_none() && res <= threshold {
                converged_at = Some(steps);
            }

            let breakdown = hnext <= BREAKDOWN_TOL * norm_before;
            if breakdown {
                if res > EXACT_TERMINATION_TOL * beta {
                    return Err(Error::Breakdown { step: steps, residual: res });
                }
                status = if converged_at.is_some() {
                    GmresStatus::Converged
                } else {
                    GmresStatus::ExactTermination
                };
                break;
            }
            if converged_at.is_some() {
                status = GmresStatus::Converged;
                break;
            }
            basis.push(w / hnext);
        }
    }

    let x = match iterates.as_ref() {
        Some(list) => list.last().expect("iterates hold x0").clone(),
        None if steps > 0 => iterate(x0, &basis, &rmat, &g, steps),
        None => x0.clone(),
    };
    let explicit_residual = (b - op.apply(&x)).norm();
    let hessenberg = h.view((0, 0), (steps + 1, steps)).into_owned();

    Ok(GmresTrace {
        residual_norms,
        iterates,
        basis,
        hessenberg,
        converged_at,
        status,
        tol: opts.tol,
        mode: opts.mode,
        rhs_norm,
        r0_norm: beta,
        x,
        explicit_residual,
    })
}
