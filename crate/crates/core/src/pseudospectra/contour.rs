use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::PseudospectrumField;
use crate::error::{Error, Result};

/// Closed level curves of `σ_min(zI − A) = δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub delta: f64,
    /// Each polyline repeats its first point at the end.
    pub polylines: Vec<Vec<Complex64>>,
    pub total_arc_length: f64,
    pub components: usize,
}

impl ContourSet {
    pub fn from_polylines(delta: f64, polylines: Vec<Vec<Complex64>>) -> Self {
        let total_arc_length = polylines.iter().map(|p| arc_length(p)).sum();
        let components = (0..polylines.len())
            .filter(|&i| {
                let probe = polylines[i][0];
                let depth = (0..polylines.len())
                    .filter(|&j| j != i && point_in_polygon(probe, &polylines[j]))
                    .count();
                depth % 2 == 0
            })
            .count();
        Self { delta, polylines, total_arc_length, components }
    }

    /// Union of contour sets computed on disjoint windows.
    pub fn merge(delta: f64, parts: Vec<ContourSet>) -> Self {
        let polylines = parts.into_iter().flat_map(|c| c.polylines).collect();
        Self::from_polylines(delta, polylines)
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.polylines.iter().flat_map(|p| p[..p.len() - 1].iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(|p| p.len() - 1).sum()
    }

    /// Whether `z` lies in the region bounded by the curves (even-odd rule).
    pub fn encloses(&self, z: Complex64) -> bool {
        self.polylines.iter().filter(|p| point_in_polygon(z, p)).count() % 2 == 1
    }

    /// Largest distance from a vertex of `self` to the vertices of `other`
    /// and vice versa.
    pub fn hausdorff_to(&self, other: &[Complex64]) -> f64 {
        let one_way = |a: &mut dyn Iterator<Item = Complex64>, b: &[Complex64]| {
            a.map(|z| b.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let mine: Vec<Complex64> = self.vertices().collect();
        one_way(&mut mine.iter().copied(), other).max(one_way(&mut other.iter().copied(), &mine))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "component,re,im")?;
        for (k, line) in self.polylines.iter().enumerate() {
            for z in line {
                writeln!(out, "{k},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn arc_length(points: &[Complex64]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

pub(crate) fn point_in_polygon(z: Complex64, poly: &[Complex64]) -> bool {
    let mut inside = false;
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Marching squares on `log10(smin)` with linear interpolation; saddle
/// cells are resolved by the average of their corners.
pub fn extract_contours(field: &PseudospectrumField, delta: f64) -> Result<ContourSet> {
    let traced = trace_level(field, delta, false)?;
    Ok(ContourSet::from_polylines(delta, traced.into_iter().map(|(line, _)| line).collect()))
}

/// Like [`extract_contours`], but curves leaving the grid are closed along
/// its edge instead of failing. The flag marks such clipped polylines.
pub(crate) fn extract_clipped(field: &PseudospectrumField, delta: f64) -> Result<Vec<(Vec<Complex64>, bool)>> {
    trace_level(field, delta, true)
}

fn trace_level(field: &PseudospectrumField, delta: f64, clip: bool) -> Result<Vec<(Vec<Complex64>, bool)>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("contour level {delta} must be positive")));
    }
    let lo = field.min();
    if delta <= lo {
        return Err(Error::InvalidArgument(format!(
            "contour level {delta:e} is below the field minimum {lo:e}"
        )));
    }
    let g = &field.grid;
    let (nx, ny) = (g.nx, g.ny);
    let level = delta.log10();
    let f = field.smin.map(|s| s.max(1e-300).log10());
    let on_edge = |ix: usize, iy: usize| ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
    let truly_inside = |ix: usize, iy: usize| f[(iy, ix)] < level;
    let inside = |ix: usize, iy: usize| truly_inside(ix, iy) && !(clip && on_edge(ix, iy));

    if !clip {
        for ix in 0..nx {
            if inside(ix, 0) || inside(ix, ny - 1) {
                return Err(Error::ContourTouchesBoundary { delta });
            }
        }
        for iy in 0..ny {
            if inside(0, iy) || inside(nx - 1, iy) {
                return Err(Error::ContourTouchesBoundary { delta });
            }
        }
    }

    let n_h = ny * (nx - 1);
    let h_edge = |ix: usize, iy: usize| iy * (nx - 1) + ix;
    let v_edge = |ix: usize, iy: usize| n_h + iy * nx + ix;
    let ends = |edge: usize| -> ((usize, usize), (usize, usize)) {
        if edge < n_h {
            let (ix, iy) = (edge % (nx - 1), edge / (nx - 1));
            ((ix, iy), (ix + 1, iy))
        } else {
            let e = edge - n_h;
            let (ix, iy) = (e % nx, e / nx);
            ((ix, iy), (ix, iy + 1))
        }
    };
    // a crossing next to an edge node that was forced outside
    let forced = |edge: usize| -> bool {
        let ((x0, y0), (x1, y1)) = ends(edge);
        clip && ((on_edge(x0, y0) && truly_inside(x0, y0)) || (on_edge(x1, y1) && truly_inside(x1, y1)))
    };
    let crossing = |edge: usize| -> Complex64 {
        let ((x0, y0), (x1, y1)) = ends(edge);
        let p0 = g.point(x0, y0);
        let p1 = g.point(x1, y1);
        if forced(edge) {
            return if on_edge(x0, y0) && truly_inside(x0, y0) { p0 } else { p1 };
        }
        let (f0, f1) = (f[(y0, x0)], f[(y1, x1)]);
        let t = ((level - f0) / (f1 - f0)).clamp(0.0, 1.0);
        p0 + (p1 - p0) * t
    };

    let mut segments: Vec<[usize; 2]> = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let b = [inside(ix, iy), inside(ix + 1, iy), inside(ix + 1, iy + 1), inside(ix, iy + 1)];
            let e = [h_edge(ix, iy), v_edge(ix + 1, iy), h_edge(ix, iy + 1), v_edge(ix, iy)];
            let crossed: Vec<usize> = (0..4).filter(|&k| b[k] != b[(k + 1) % 4]).collect();
            match crossed.len() {
                0 => {}
                2 => segments.push([e[crossed[0]], e[crossed[1]]]),
                _ => {
                    let centre = 0.25 * (f[(iy, ix)] + f[(iy, ix + 1)] + f[(iy + 1, ix + 1)] + f[(iy + 1, ix)]);
                    if (centre < level) == b[0] {
                        segments.push([e[0], e[1]]);
                        segments.push([e[2], e[3]]);
                    } else {
                        segments.push([e[3], e[0]]);
                        segments.push([e[1], e[2]]);
                    }
                }
            }
        }
    }

    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            incident.entry(e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first_edge = segments[start][0];
        let mut edge = segments[start][1];
        let mut line = vec![crossing(first_edge), crossing(edge)];
        let mut clipped = forced(first_edge) || forced(edge);
        while edge != first_edge {
            let next = incident[&edge].iter().copied().find(|&s| !used[s]);
            let Some(s) = next else {
                return Err(Error::Numerical("open contour segment in interior of grid".into()));
            };
            used[s] = true;
            edge = if segments[s][0] == edge { segments[s][1] } else { segments[s][0] };
            clipped |= forced(edge);
            line.push(crossing(edge));
        }
        polylines.push((line, clipped));
    }
    Ok(polylines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudospectra::{resolvent_field, GridSpec};
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    #[test]
    fn identity_disk() {
        let a = DMatrix::<f64>::identity(4, 4);
        let grid = GridSpec::centered(Complex64::new(1.0, 0.0), 0.3, 81).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        let c = extract_contours(&field, 0.1).unwrap();
        assert_eq!(c.components, 1);
        assert!((c.total_arc_length / (2.0 * PI * 0.1) - 1.0).abs() < 0.02);
        for line in &c.polylines {
            assert_eq!(line.first(), line.last());
            for z in line {
                assert!(((z - 1.0).norm() - 0.1).abs() < 2e-3);
            }
        }
        assert!(c.encloses(Complex64::new(1.0, 0.0)));
        assert!(!c.encloses(Complex64::new(1.2, 0.0)));
    }

    #[test]
    fn two_circles() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let grid = GridSpec::new([0.7, 2.3], [-0.4, 0.4], 161, 81).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        let c = extract_contours(&field, 0.1).unwrap();
        assert_eq!(c.components, 2);
        assert!((c.total_arc_length / (4.0 * PI * 0.1) - 1.0).abs() < 0.02);
    }

    #[test]
    fn annulus_counts_one_component() {
        let ring = |r: f64, n: usize| -> Vec<Complex64> {
            let mut v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64)).collect();
            v.push(v[0]);
            v
        };
        let c = ContourSet::from_polylines(0.1, vec![ring(1.0, 64), ring(2.0, 64)]);
        assert_eq!(c.components, 1);
        assert!(c.encloses(Complex64::new(1.5, 0.0)));
        assert!(!c.encloses(Complex64::new(0.5, 0.0)));
    }

    #[test]
    fn clipped_curves_are_flagged() {
        let a = DMatrix::<f64>::identity(2, 2);
        let grid = GridSpec::centered(Complex64::new(1.0, 0.0), 0.05, 32).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        let lines = extract_clipped(&field, 0.1).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].1);
        assert!(point_in_polygon(Complex64::new(1.0, 0.0), &lines[0].0));

        let grid = GridSpec::centered(Complex64::new(1.0, 0.0), 0.3, 61).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        let lines = extract_clipped(&field, 0.1).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].1);
    }

    #[test]
    fn boundary_touch_is_an_error() {
        let a = DMatrix::<f64>::identity(2, 2);
        let grid = GridSpec::centered(Complex64::new(1.0, 0.0), 0.05, 32).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        assert!(matches!(extract_contours(&field, 0.1), Err(Error::ContourTouchesBoundary { .. })));
        assert!(matches!(extract_contours(&field, 10.0), Err(Error::ContourTouchesBoundary { .. })));
        assert!(matches!(extract_contours(&field, 1e-30), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sublevel_inclusion() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 1.5]);
        let grid = GridSpec::new([0.0, 2.5], [-1.0, 1.0], 41, 33).unwrap();
        let field = resolvent_field(&a, &grid).unwrap();
        for (d1, d2) in [(0.01, 0.05), (0.05, 0.2)] {
            for v in field.smin.iter() {
                if *v < d1 {
                    assert!(*v < d2);
                }
            }
        }
    }
}
