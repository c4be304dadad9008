use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sufficient-decrease constant in `g(λ) ≤ (1 − 2αλ) g(0)`.
pub const ARMIJO_ALPHA: f64 = 1e-4;
pub const MAX_REDUCTIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchResult {
    pub lambda: f64,
    pub g: f64,
    pub reductions: usize,
    pub evaluations: usize,
}

/// Minimizer of the parabola through `(0, g0)`, `(l1, g1)`, `(l2, g2)`,
/// clamped to `[0.1 lc, 0.5 lc]`.
pub fn parabolic_step(g0: f64, (l1, g1): (f64, f64), (l2, g2): (f64, f64), lc: f64) -> f64 {
    let (lo, hi) = (0.1 * lc, 0.5 * lc);
    let (d1, d2) = (g1 - g0, g2 - g0);
    let a = (d1 * l2 - d2 * l1) / (l1 * l2 * (l1 - l2));
    if !(a > 0.0) || !a.is_finite() {
        return hi;
    }
    let b = (d1 - a * l1 * l1) / l1;
    (-b / (2.0 * a)).clamp(lo, hi)
}

/// Armijo line search with three-point parabolic backtracking.
///
/// `g(λ) = ‖G(u + λ d)‖²`. The full step is tried first. After the first
/// failure `g(λ/2)` is sampled so that a parabola can be fitted; later
/// reductions reuse the two most recent trial points.
pub fn line_search<F: FnMut(f64) -> f64>(mut g: F) -> Result<LineSearchResult> {
    let g0 = g(0.0);
    if !g0.is_finite() {
        return Err(Error::InvalidArgument(format!("g(0) = {g0} is not finite")));
    }
    let armijo = |lambda: f64, value: f64| value <= (1.0 - 2.0 * ARMIJO_ALPHA * lambda) * g0;
    let mut lambda = 1.0;
    let mut gc = g(lambda);
    let mut evaluations = 2;
    if armijo(lambda, gc) {
        return Ok(LineSearchResult { lambda, g: gc, reductions: 0, evaluations });
    }
    let half = 0.5 * lambda;
    let mut older = (lambda, finite_or_max(gc));
    let mut newer = (half, finite_or_max(g(half)));
    evaluations += 1;
    for reductions in 1..=MAX_REDUCTIONS {
        lambda = parabolic_step(g0, older, newer, lambda);
        gc = g(lambda);
        evaluations += 1;
        if armijo(lambda, gc) {
            return Ok(LineSearchResult { lambda, g: gc, reductions, evaluations });
        }
        older = newer;
        newer = (lambda, finite_or_max(gc));
    }
    Err(Error::LineSearchFailed(MAX_REDUCTIONS))
}

fn finite_or_max(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}
