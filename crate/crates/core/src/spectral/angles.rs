use std::f64::consts::FRAC_PI_4;

use crate::linalg::CVector;
use crate::matgen::LowRankFactors;

/// Principal angles between `R(U₁)` and `R(V₂)`, ascending.
///
/// Small angles come from the sines `σ(V₁ᵀU₁)`, large ones from the
/// cosines `σ(U₁ᵀV₂)`; each formula is accurate in its own range.
pub fn principal_angles(f: &LowRankFactors) -> Vec<f64> {
    let p = f.p;
    if p == 0 {
        return Vec::new();
    }
    let mut sines: Vec<f64> = (f.v1.transpose() * &f.u1).singular_values().iter().copied().collect();
    sines.sort_by(f64::total_cmp);
    let v2 = f.v2();
    let mut cosines: Vec<f64> = if v2.ncols() == 0 {
        Vec::new()
    } else {
        (f.u1.transpose() * v2).singular_values().iter().copied().collect()
    };
    cosines.sort_by(|a, b| b.total_cmp(a));
    cosines.resize(p, 0.0);
    (0..p)
        .map(|i| {
            let from_sine = sines[i].min(1.0).asin();
            if from_sine < FRAC_PI_4 {
                from_sine
            } else {
                cosines[i].clamp(0.0, 1.0).acos()
            }
        })
        .collect()
}

/// Angle between `x` and `R(V₂)`: `asin(‖V₁ᵀx‖ / ‖x‖)`.
pub fn angle_to_v2(f: &LowRankFactors, x: &CVector) -> f64 {
    let v1 = f.v1.map(|v| num_complex::Complex64::new(v, 0.0));
    let ratio = (v1.transpose() * x).norm() / x.norm();
    ratio.min(1.0).asin()
}
