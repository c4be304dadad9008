use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::krylov::LinearOperator;

/// `‖E‖₂` estimated from a `k`-step Arnoldi process on the action of `E`.
///
/// Returns the largest singular value of the `(k+1) × k` Hessenberg
/// matrix, which never exceeds `‖E‖₂` and cannot decrease as `k` grows.
/// The same Krylov space is built by GMRES on `I + E` from `start`.
pub fn estimate_perturbation_norm<A: LinearOperator + ?Sized>(e: &A, start: &DVector<f64>, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("subspace size k = {k} must be at least 2")));
    }
    if start.len() != e.dim() {
        return Err(Error::Dimension(format!("start vector has length {}, operator has {}", start.len(), e.dim())));
    }
    let beta = start.norm();
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("start vector must be nonzero".into()));
    }
    let k = k.min(e.dim());
    let mut basis = vec![start / beta];
    let mut h = DMatrix::zeros(k + 1, k);
    let mut steps = 0;
    for j in 0..k {
        let mut w = e.apply(&basis[j]);
        let norm_before = w.norm();
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = v.dot(&w);
                h[(i, j)] += c;
                w.axpy(-c, v, 1.0);
            }
        }
        let hn = w.norm();
        h[(j + 1, j)] = hn;
        steps = j + 1;
        if hn <= 1e-14 * norm_before.max(f64::MIN_POSITIVE) {
            break;
        }
        basis.push(w / hn);
    }
    let hk = h.view((0, 0), (steps + 1, steps)).into_owned();
    Ok(hk.singular_values().max())
}
