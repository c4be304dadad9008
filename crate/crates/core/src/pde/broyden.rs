use std::io::Write;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use super::estimate::estimate_perturbation_norm;
use super::ilut::IlutFactors;
use super::linesearch::line_search;
use super::problem::{spmv, DiscreteProblem};
use crate::error::{Error, Result};
use crate::krylov::{gmres_solve, FnOperator, GmresOptions, GmresStatus};
use crate::matgen::LowRankFactors;
use crate::spectral::svd_split_outer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroydenOptions {
    /// Stop once `‖F(u_k)‖ ≤ nl_tol ‖F(u_0)‖`.
    pub nl_tol: f64,
    pub nl_maxit: usize,
    /// Absolute tolerance on the preconditioned linear residual.
    pub gmres_tol: f64,
    pub gmres_maxit: usize,
    /// Arnoldi steps used for the `‖E‖₂` estimate.
    pub eps_subspace: usize,
}

impl Default for BroydenOptions {
    fn default() -> Self {
        Self { nl_tol: 1e-10, nl_maxit: 50, gmres_tol: 1e-10, gmres_maxit: 100, eps_subspace: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroydenStep {
    pub step: usize,
    /// `‖F(u_k)‖₂` before the step.
    pub f_norm: f64,
    /// `‖P F(u_k)‖₂` before the step.
    pub pf_norm: f64,
    /// Rank of `K` in the system solved at this step.
    pub rank: usize,
    pub gmres_iterations: usize,
    pub gmres_status: GmresStatus,
    pub gmres_residual: f64,
    pub lambda: f64,
    pub line_search_reductions: usize,
    /// `‖B_{k+1} s_k − y_k‖ / ‖y_k‖`.
    pub secant_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BroydenTrace {
    pub mesh: usize,
    pub steps: Vec<BroydenStep>,
    pub f0_norm: f64,
    pub final_f_norm: f64,
    pub final_pf_norm: f64,
    pub converged: bool,
    /// `‖E‖₂` estimated before the first step.
    pub eps_estimate: f64,
    #[serde(skip)]
    pub update_pairs: Vec<(DVector<f64>, DVector<f64>)>,
    #[serde(skip)]
    pub u: DVector<f64>,
}

/// `B_k v = P J₀ v + Σ_j w_j (s_jᵀ v) / (s_jᵀ s_j)`.
struct BroydenOperator<'a> {
    j0: &'a CsrMatrix<f64>,
    precond: &'a IlutFactors,
    pairs: &'a [(DVector<f64>, DVector<f64>)],
}

impl BroydenOperator<'_> {
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.precond.apply(&spmv(self.j0, v));
        for (w, s) in self.pairs {
            out.axpy(s.dot(v) / s.norm_squared(), w, 1.0);
        }
        out
    }
}

/// `v ↦ P J₀ v − v`.
pub fn perturbation_action<'a>(
    j0: &'a CsrMatrix<f64>,
    precond: &'a IlutFactors,
) -> FnOperator<impl Fn(&DVector<f64>) -> DVector<f64> + 'a> {
    FnOperator::new(j0.nrows(), move |v: &DVector<f64>| precond.apply(&spmv(j0, v)) - v)
}

/// Good Broyden on `G(u) = P F(u)` from `u = 0` with `B₀ = P J₀`.
pub fn broyden_solve(problem: &DiscreteProblem, precond: &IlutFactors, opts: &BroydenOptions) -> Result<BroydenTrace> {
    let n = problem.n;
    if precond.dim() != n {
        return Err(Error::Dimension(format!("preconditioner has size {}, problem has {n} unknowns", precond.dim())));
    }
    if !(opts.gmres_tol > 0.0 && opts.gmres_tol < 1.0) || !(opts.nl_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive and gmres_tol below 1".into()));
    }
    let j0 = problem.jacobian0();
    let mut u = DVector::zeros(n);
    let mut f = problem.residual(&u)?;
    let mut g = precond.apply(&f);
    let f0_norm = f.norm();
    let eps_estimate = if g.norm() > 0.0 {
        estimate_perturbation_norm(&perturbation_action(&j0, precond), &g, opts.eps_subspace.max(2))?
    } else {
        0.0
    };
    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    let mut steps = Vec::new();
    let gmres_opts = GmresOptions::absolute(opts.gmres_tol, opts.gmres_maxit);
    let mut converged = f.norm() <= opts.nl_tol * f0_norm;
    while !converged && steps.len() < opts.nl_maxit {
        let k = steps.len();
        let b_k = BroydenOperator { j0: &j0, precond, pairs: &pairs };
        let op = FnOperator::new(n, |v: &DVector<f64>| b_k.apply(v));
        let rhs = -&g;
        let trace = gmres_solve(&op, &rhs, &DVector::zeros(n), &gmres_opts)?;
        let d = trace.x.clone();
        let ls = line_search(|lambda| {
            let trial = &u + lambda * &d;
            precond.apply(&problem.residual(&trial).expect("own length")).norm_squared()
        })?;
        let s = ls.lambda * &d;
        let u_next = &u + &s;
        let f_next = problem.residual(&u_next)?;
        let g_next = precond.apply(&f_next);
        let y = &g_next - &g;
        let bs = b_k.apply(&s);
        let w = &y - &bs;
        let secant = (&bs + &w * (s.dot(&s) / s.norm_squared()) - &y).norm() / y.norm();
        steps.push(BroydenStep {
            step: k,
            f_norm: f.norm(),
            pf_norm: g.norm(),
            rank: pairs.len(),
            gmres_iterations: trace.iterations(),
            gmres_status: trace.status,
            gmres_residual: trace.residual_norms.last().copied().unwrap_or(f64::NAN),
            lambda: ls.lambda,
            line_search_reductions: ls.reductions,
            secant_residual: secant,
        });
        pairs.push((w, s));
        u = u_next;
        f = f_next;
        g = g_next;
        converged = f.norm() <= opts.nl_tol * f0_norm;
    }
    Ok(BroydenTrace {
        mesh: problem.mesh,
        steps,
        f0_norm,
        final_f_norm: f.norm(),
        final_pf_norm: g.norm(),
        converged,
        eps_estimate,
        update_pairs: pairs,
        u,
    })
}

impl BroydenTrace {
    pub fn rank(&self) -> usize {
        self.update_pairs.len()
    }

    /// Secant residual of `B_{k+1}` against every stored pair, not only the last.
    pub fn secant_residuals(&self, problem: &DiscreteProblem, precond: &IlutFactors) -> Vec<f64> {
        let j0 = problem.jacobian0();
        let pf = |u: &DVector<f64>| precond.apply(&problem.residual(u).expect("own length"));
        let mut u = DVector::zeros(problem.n);
        let mut g = pf(&u);
        (0..self.update_pairs.len())
            .map(|k| {
                let op = BroydenOperator { j0: &j0, precond, pairs: &self.update_pairs[..=k] };
                let s = &self.update_pairs[k].1;
                u += s;
                let g_next = pf(&u);
                let y = &g_next - &g;
                g = g_next;
                (op.apply(s) - &y).norm() / y.norm()
            })
            .collect()
    }

    /// `K_p = Σ w_j s_jᵀ / (s_jᵀ s_j)` from the first `p` pairs, as an SVD split.
    pub fn k_factors(&self, p: usize, rank_tol: f64) -> Result<LowRankFactors> {
        if p > self.update_pairs.len() {
            return Err(Error::InvalidArgument(format!("only {} update pairs stored, asked for {p}", self.update_pairs.len())));
        }
        let n = self.u.len();
        let mut w = DMatrix::zeros(n, p);
        let mut s = DMatrix::zeros(n, p);
        for (j, (wj, sj)) in self.update_pairs[..p].iter().enumerate() {
            w.set_column(j, wj);
            s.set_column(j, &(sj / sj.norm_squared()));
        }
        svd_split_outer(&w, &s, rank_tol)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,f_norm,rank,gmres_iters,lambda")?;
        for s in &self.steps {
            writeln!(out, "{},{:e},{},{},{:e}", s.step, s.f_norm, s.rank, s.gmres_iterations, s.lambda)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
