use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::*;
use crate::krylov::{gmres_solve, GmresOptions};
use crate::matgen::{families, random_perturbation};
use crate::pseudospectra::ContourSet;

fn circle(center: f64, radius: f64, n: usize) -> Vec<Complex64> {
    (0..=n)
        .map(|k| Complex64::new(center, 0.0) + Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

#[test]
fn cm_for_normal_matrix_matches_disk_model() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
    let delta = 1e-3;
    let ctx = BoundContext::dense(&a).unwrap();
    let poly = CompositePolynomial::power_of(ResidualPolynomial::new(vec![c(2.5)]).unwrap(), 2);
    let eval = ctx.refined_cm(1.0, &poly, delta).unwrap();
    // two circles of radius δ: L = 4πδ, sup |φ| ≈ (0.5 + δ)²
    let expect = 4.0 * std::f64::consts::PI * delta / (std::f64::consts::PI * delta * delta) * (0.5 + delta).powi(2) / 6.25;
    assert!((eval.c_m - expect).abs() / expect < 0.01, "{} vs {}", eval.c_m, expect);
    let asym = asymptotic_bound(&ctx.cond, &poly, 1e-4, delta, 1.0, 256).unwrap();
    assert!((1e-4 * eval.c_m - asym.value).abs() / asym.value < 0.05);
    assert!(!asym.overlapping);
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn cm_uses_given_contours() {
    let poly = ResidualPolynomial::new(vec![c(1.0)]).unwrap();
    let set = ContourSet::from_polylines(0.1, vec![circle(1.0, 0.1, 4000)]);
    let eval = compute_cm(2.0, &poly, 3, 0.1, &set).unwrap();
    let expect = 2.0 * std::f64::consts::PI * 0.1 * 2.0 / (std::f64::consts::PI * 0.01) * 1e-3;
    assert!((eval.c_m - expect).abs() / expect < 1e-4);
    assert_eq!(eval.power, 3);
    assert_eq!(eval.m, 3);
}

#[test]
fn cm_rejects_mismatched_or_empty_contours() {
    let poly = ResidualPolynomial::one();
    let set = ContourSet::from_polylines(0.1, vec![circle(1.0, 0.1, 64)]);
    assert!(compute_cm(1.0, &poly, 1, 0.2, &set).unwrap_err().is_validation());
    let empty = ContourSet::from_polylines(0.1, vec![]);
    assert!(compute_cm(1.0, &poly, 1, 0.1, &empty).unwrap_err().is_validation());
}

#[test]
fn residual_bound_enforces_eps_below_delta() {
    let poly = ResidualPolynomial::one();
    let set = ContourSet::from_polylines(0.1, vec![circle(1.0, 0.1, 64)]);
    let eval = compute_cm(1.0, &poly, 1, 0.1, &set).unwrap();
    assert!(matches!(residual_bound(None, 0.1, &eval), Err(Error::BoundHypothesis(_))));
    assert!(matches!(residual_bound(None, 0.2, &eval), Err(Error::BoundHypothesis(_))));
    let b = residual_bound(Some(0.5), 0.01, &eval).unwrap();
    assert!((b - (0.5 + 0.01 * eval.c_m)).abs() < 1e-12);
    let e = eval.clone().with_residual(None, 0.01).unwrap();
    assert_eq!(e.mode, BoundMode::Eq6);
    let e = eval.with_residual(Some(0.5), 0.01).unwrap();
    assert_eq!(e.mode, BoundMode::Eq4);
}

#[test]
fn composite_polynomial_splits_degree() {
    let f = families::fig1(families::DEFAULT_SEED).unwrap();
    let a = f.identity_plus_k();
    let b = DVector::from_element(a.nrows(), 1.0 / (a.nrows() as f64).sqrt());
    let trace = gmres_solve(&a, &b, &DVector::zeros(a.nrows()), &GmresOptions::absolute(1e-10, 25)).unwrap();
    let d = trace.converged_at.unwrap();
    let m = 2 * d + 1;
    let poly = CompositePolynomial::from_trace(&trace, m).unwrap();
    assert_eq!(poly.degree(), m);
    assert_eq!(poly.power, 2);
    let z = Complex64::new(1.3, 0.2);
    let direct = poly.base.eval(z).norm().powi(2) * poly.tail.eval(z).norm();
    assert!((poly.abs(z) - direct).abs() <= 1e-12 * direct);
    let rho = unperturbed_residual(&a, &b, &poly);
    assert!(rho <= 1e-8);
    let rho_d = unperturbed_residual(&a, &b, &CompositePolynomial::from_trace(&trace, d).unwrap());
    assert!((rho_d - trace.residual_norms[d]).abs() <= 1e-8);
}

#[test]
fn perturbed_residuals_respect_bound() {
    let f = families::fig1(families::DEFAULT_SEED).unwrap();
    let a = f.identity_plus_k();
    let b = DVector::from_element(a.nrows(), 1.0 / (a.nrows() as f64).sqrt());
    let trace = gmres_solve(&a, &b, &DVector::zeros(a.nrows()), &GmresOptions::absolute(1e-10, 25)).unwrap();
    let ctx = BoundContext::identity_plus_low_rank(&f).unwrap();
    let (eps, delta, m) = (1e-5, 1e-4, 3);
    let poly = CompositePolynomial::from_trace(&trace, m).unwrap();
    let rho = unperturbed_residual(&a, &b, &poly);
    let eval = ctx.refined_cm(1.0, &poly, delta).unwrap().with_residual(Some(rho), eps).unwrap();
    for seed in 0..5 {
        let e = random_perturbation(a.nrows(), eps, seed).unwrap();
        let ap = &a + &e.e;
        let t = gmres_solve(&ap, &b, &DVector::zeros(a.nrows()), &GmresOptions::absolute(0.0, m)).unwrap();
        assert!(t.residual_norms[m] <= eval.bound_total * (1.0 + 1e-8));
    }
}

#[test]
fn sweep_rejects_inadmissible_deltas() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
    let ctx = BoundContext::dense(&a).unwrap();
    let poly = CompositePolynomial::power_of(ResidualPolynomial::one(), 1);
    let eps = 0.5 * ctx.delta0;
    assert!(matches!(sweep_delta(&ctx, 1.0, &poly, eps, None, &[0.1 * eps]), Err(Error::EmptyRange(_))));
    assert!(matches!(sweep_delta(&ctx, 1.0, &poly, 3.0, None, &[0.1]), Err(Error::EmptyRange(_))));
    assert!(sweep_delta(&ctx, 1.0, &poly, 1e-3, None, &[]).unwrap_err().is_validation());
}

#[test]
fn sweep_picks_smallest_bound() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
    let ctx = BoundContext::dense(&a).unwrap();
    let poly = CompositePolynomial::power_of(ResidualPolynomial::new(vec![c(2.0), c(3.0)]).unwrap(), 1);
    let sweep = sweep_delta(&ctx, 1.0, &poly, 1e-4, Some(0.0), &[2e-4, 1e-3, 1e-2, 1e-1]).unwrap();
    let best = sweep.best().bound_total;
    assert!(sweep.evaluations.iter().all(|e| e.bound_total >= best));
    let mut csv = Vec::new();
    write_bounds_csv(&mut csv, &sweep.evaluations).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("m,delta,C_m,bound_total\n"));
    assert_eq!(text.lines().count(), 5);
}
