
use super::conditioning::EigConditioning;
use num_complex::Complex64;

use super::contour::{extract_clipped, point_in_polygon, ContourSet};
use super::field::{resolvent_field_with, GridSpec, ResolventOperator, MIN_GRID};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AutoContourOptions {
    /// Grid nodes along the longer side of each window.
    pub resolution: usize,
    /// Initial half-width in units of `κ_j δ`.
    pub inflate: f64,
    pub max_enlargements: usize,
    pub max_resolution: usize,
}

impl Default for AutoContourOptions {
    fn default() -> Self {
        Self { resolution: 65, inflate: 4.0, max_enlargements: 12, max_resolution: 513 }
    }
}

#[derive(Debug, Clone)]
struct Window {
    re: [f64; 2],
    im: [f64; 2],
    members: Vec<usize>,
    resolution: usize,
    result: Option<ContourSet>,
}

impl Window {
    fn absorb(&mut self, other: Window) {
        self.re = [self.re[0].min(other.re[0]), self.re[1].max(other.re[1])];
        self.im = [self.im[0].min(other.im[0]), self.im[1].max(other.im[1])];
        self.members.extend(other.members);
        self.resolution = self.resolution.max(other.resolution);
        self.result = None;
    }

    fn enlarge(&mut self) {
        let grow = |r: [f64; 2]| {
            let c = 0.5 * (r[0] + r[1]);
            let h = r[1] - r[0];
            [c - h, c + h]
        };
        self.re = grow(self.re);
        self.im = grow(self.im);
        self.result = None;
    }

    fn grid(&self) -> Result<GridSpec> {
        let w = self.re[1] - self.re[0];
        let h = self.im[1] - self.im[0];
        let long = w.max(h);
        let scaled = |side: f64| ((self.resolution as f64 * side / long).ceil() as usize).max(MIN_GRID);
        GridSpec::new(self.re, self.im, scaled(w), scaled(h))
    }
}

fn merge_groups(mut windows: Vec<Window>, linked: impl Fn(&Window, &Window) -> bool) -> Vec<Window> {
    loop {
        let mut merged = false;
        'outer: for i in 0..windows.len() {
            for j in (i + 1)..windows.len() {
                if linked(&windows[i], &windows[j]) {
                    let w = windows.swap_remove(j);
                    windows[i].absorb(w);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return windows;
        }
    }
}

fn encloses(line: &[Complex64], other: &[Complex64]) -> bool {
    point_in_polygon(other[0], line)
}

fn enclosed_area(line: &[Complex64]) -> f64 {
    0.5 * line.windows(2).map(|w| w[0].re * w[1].im - w[1].re * w[0].im).sum::<f64>().abs()
}

enum Outcome {
    Solved(Vec<Vec<Complex64>>),
    Enlarge,
    Refine,
    Merge(Vec<usize>),
}

/// Components of the window's own eigenvalues: the innermost curve around
/// each member plus the curves directly nested in it (holes).
fn own_components(lines: &[(Vec<Complex64>, bool)], members: &[usize], eigenvalues: &[Complex64]) -> Outcome {
    let mut outers: Vec<usize> = Vec::new();
    for &j in members {
        let around = (0..lines.len())
            .filter(|&k| point_in_polygon(eigenvalues[j], &lines[k].0))
            .min_by(|&x, &y| enclosed_area(&lines[x].0).total_cmp(&enclosed_area(&lines[y].0)));
        match around {
            None => return Outcome::Refine,
            Some(k) if lines[k].1 => return Outcome::Enlarge,
            Some(k) => {
                if !outers.contains(&k) {
                    outers.push(k);
                }
            }
        }
    }
    let mut kept = Vec::new();
    let mut foreign = Vec::new();
    for &o in &outers {
        let holes: Vec<usize> = (0..lines.len())
            .filter(|&h| {
                h != o
                    && encloses(&lines[o].0, &lines[h].0)
                    && !(0..lines.len()).any(|m| {
                        m != o && m != h && encloses(&lines[o].0, &lines[m].0) && encloses(&lines[m].0, &lines[h].0)
                    })
            })
            .collect();
        for (j, &z) in eigenvalues.iter().enumerate() {
            let in_region = point_in_polygon(z, &lines[o].0) && !holes.iter().any(|&h| point_in_polygon(z, &lines[h].0));
            if in_region && !members.contains(&j) && !foreign.contains(&j) {
                foreign.push(j);
            }
        }
        kept.push(lines[o].0.clone());
        kept.extend(holes.iter().map(|&h| lines[h].0.clone()));
    }
    if foreign.is_empty() {
        Outcome::Solved(kept)
    } else {
        Outcome::Merge(foreign)
    }
}

/// Contours of `σ_δ(A)` from per-eigenvalue windows of half-width
/// `inflate·κ_j·δ`, capped at the nearly-defective scale `inflate·sqrt(δ‖A‖)`. Windows whose asymptotic disks overlap start merged,
/// and windows whose level curves turn out to share a component are merged
/// later. Each window keeps only the components around its own eigenvalues
/// and is doubled in size while one of them leaves it.
///
/// `norm_a` scales the windows of defective eigenvalues.
pub fn auto_contours(
    op: &ResolventOperator,
    norm_a: f64,
    delta: f64,
    cond: &EigConditioning,
    opts: &AutoContourOptions,
) -> Result<ContourSet> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("contour level {delta} must be positive")));
    }
    let defective = (delta * norm_a.max(1.0)).sqrt();
    let radius = |j: usize| {
        if cond.kappas[j].is_finite() {
            (cond.kappas[j] * delta).min(defective).max(delta)
        } else {
            defective
        }
    };
    let windows: Vec<Window> = cond
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let half = opts.inflate * radius(j);
            Window {
                re: [lambda.re - half, lambda.re + half],
                im: [lambda.im - half, lambda.im + half],
                members: vec![j],
                resolution: opts.resolution.max(MIN_GRID),
                result: None,
            }
        })
        .collect();
    let disks_meet = |a: &Window, b: &Window| {
        a.members.iter().any(|&i| {
            b.members.iter().any(|&j| (cond.eigenvalues[i] - cond.eigenvalues[j]).norm() <= radius(i) + radius(j))
        })
    };
    let mut windows = merge_groups(windows, disks_meet);

    let mut enlargements = 0;
    'restart: loop {
        for i in 0..windows.len() {
            while windows[i].result.is_none() {
                let budget = opts.max_enlargements * windows.len();
                let w = &mut windows[i];
                let field = resolvent_field_with(op, &w.grid()?)?;
                let outcome = match extract_clipped(&field, delta) {
                    Ok(lines) => own_components(&lines, &w.members, &cond.eigenvalues),
                    Err(Error::InvalidArgument(_)) => Outcome::Refine,
                    Err(e) => return Err(e),
                };
                match outcome {
                    Outcome::Solved(lines) => w.result = Some(ContourSet::from_polylines(delta, lines)),
                    Outcome::Enlarge => {
                        enlargements += 1;
                        if enlargements > budget {
                            return Err(Error::ContourTouchesBoundary { delta });
                        }
                        w.enlarge();
                    }
                    Outcome::Refine => {
                        if 2 * w.resolution - 1 > opts.max_resolution {
                            return Err(Error::Numerical(format!(
                                "level {delta:e} unresolved near {} at {} grid nodes",
                                w.members.iter().map(|&j| cond.eigenvalues[j].to_string()).collect::<Vec<_>>().join(", "),
                                w.resolution
                            )));
                        }
                        w.resolution = 2 * w.resolution - 1;
                    }
                    Outcome::Merge(foreign) => {
                        let mut others: Vec<usize> =
                            (0..windows.len()).filter(|&k| k != i && windows[k].members.iter().any(|j| foreign.contains(j))).collect();
                        others.sort_unstable_by(|a, b| b.cmp(a));
                        let mut target = i;
                        for k in others {
                            let w = windows.remove(k);
                            if k < target {
                                target -= 1;
                            }
                            windows[target].absorb(w);
                        }
                        windows.iter_mut().for_each(|w| {
                            if w.result.is_some() && w.members.iter().any(|j| foreign.contains(j)) {
                                w.result = None;
                            }
                        });
                        continue 'restart;
                    }
                }
            }
        }
        break;
    }
    let parts = windows.into_iter().map(|w| w.result.expect("window solved")).collect();
    Ok(ContourSet::merge(delta, parts))
}
