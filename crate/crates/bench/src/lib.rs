//! Shared inputs for the kernel benchmarks.

use ikegmres::matgen::{assemble, families, random_perturbation};
use ikegmres::pde::{discretize, ilut, DiscreteProblem, IlutFactors, IlutOptions, DEFAULT_DROPTOL};
use ikegmres::{DMatrix, DVector, LowRankFactors, RhsMode};

/// Perturbed rank-2 system of the convergence experiments.
pub struct DenseSystem {
    pub factors: LowRankFactors,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

pub fn fig1_system(eps: f64) -> DenseSystem {
    let factors = families::fig1(families::DEFAULT_SEED).expect("fixed family");
    let e = random_perturbation(factors.n, eps, 1).expect("valid eps");
    let sys = assemble(&factors, Some(&e), RhsMode::RandomUnit, families::DEFAULT_SEED).expect("consistent shapes");
    DenseSystem { factors, a: sys.a, b: sys.b }
}

pub struct PdeFixture {
    pub problem: DiscreteProblem,
    pub precond: IlutFactors,
}

pub fn pde_fixture(mesh: usize) -> PdeFixture {
    let problem = discretize(mesh).expect("mesh >= 4");
    let precond = ilut(&problem.jacobian0(), &IlutOptions::new(DEFAULT_DROPTOL)).expect("nonsingular");
    PdeFixture { problem, precond }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let s = fig1_system(1e-5);
        assert_eq!(s.a.nrows(), 25);
        assert!((s.b.norm() - 1.0).abs() < 1e-12);
        let p = pde_fixture(11);
        assert_eq!(p.precond.dim(), 100);
    }
}
