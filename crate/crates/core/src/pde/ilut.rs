use std::collections::BTreeSet;

use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlutOptions {
    /// Entries of row `i` below `droptol · ‖a_i‖₂` are dropped; multipliers
    /// `l_ik` are measured as `|l_ik u_kk|`.
    pub droptol: f64,
    /// Largest number of entries kept in each of the L and U parts of a row.
    pub max_fill: Option<usize>,
}

impl IlutOptions {
    pub fn new(droptol: f64) -> Self {
        Self { droptol, max_fill: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillStats {
    pub nnz_a: usize,
    pub nnz_l: usize,
    pub nnz_u: usize,
}

impl FillStats {
    pub fn fill_ratio(&self) -> f64 {
        (self.nnz_l + self.nnz_u) as f64 / self.nnz_a as f64
    }
}

/// Incomplete factors `A ≈ L U`.
///
/// `l` holds only the strictly lower part; the unit diagonal is implicit.
/// Each row of `u` starts with its diagonal entry.
#[derive(Debug, Clone)]
pub struct IlutFactors {
    pub l: CsrMatrix<f64>,
    pub u: CsrMatrix<f64>,
    pub droptol: f64,
    pub fill: FillStats,
}

struct RowBuilder {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl RowBuilder {
    fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        Self { offsets, cols: Vec::new(), vals: Vec::new() }
    }

    fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(j, v) in entries {
            self.cols.push(j);
            self.vals.push(v);
        }
        self.offsets.push(self.cols.len());
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    fn finish(self, n: usize) -> CsrMatrix<f64> {
        CsrMatrix::try_from_unsorted_csr_data(n, n, self.offsets, self.cols, self.vals)
            .expect("valid incomplete factor pattern")
    }
}

fn keep_largest(entries: &mut Vec<(usize, f64)>, cap: Option<usize>) {
    if let Some(p) = cap {
        if entries.len() > p {
            entries.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
            entries.truncate(p);
        }
    }
}

/// Dual-threshold incomplete LU without pivoting.
pub fn ilut(a: &CsrMatrix<f64>, opts: &IlutOptions) -> Result<IlutFactors> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::Dimension(format!("ILUT needs a nonempty square matrix, got {}x{}", n, a.ncols())));
    }
    if !(opts.droptol >= 0.0) {
        return Err(Error::InvalidArgument(format!("drop tolerance {} must be nonnegative", opts.droptol)));
    }
    let mut lb = RowBuilder::new(n);
    let mut ub = RowBuilder::new(n);
    let mut w = vec![0.0; n];
    let mut in_row = vec![false; n];
    let mut pattern: Vec<usize> = Vec::new();
    let mut pending = BTreeSet::new();
    for i in 0..n {
        let row = a.row(i);
        let tau = opts.droptol * row.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            w[j] = v;
            in_row[j] = true;
            pattern.push(j);
            if j < i {
                pending.insert(j);
            }
        }
        while let Some(k) = pending.pop_first() {
            let (ucols, uvals) = ub.row(k);
            if w[k].abs() < tau {
                w[k] = 0.0;
                continue;
            }
            let factor = w[k] / uvals[0];
            w[k] = factor;
            for (&j, &v) in ucols[1..].iter().zip(&uvals[1..]) {
                if !in_row[j] {
                    in_row[j] = true;
                    pattern.push(j);
                    w[j] = 0.0;
                    if j < i {
                        pending.insert(j);
                    }
                }
                w[j] -= factor * v;
            }
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut diag = 0.0;
        for &j in &pattern {
            let v = w[j];
            if j == i {
                diag = v;
            } else if j < i {
                if v != 0.0 && (v * ub.row(j).1[0]).abs() >= tau {
                    lower.push((j, v));
                }
            } else if v != 0.0 && v.abs() >= tau {
                upper.push((j, v));
            }
            w[j] = 0.0;
            in_row[j] = false;
        }
        pattern.clear();
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::ZeroPivot(i));
        }
        keep_largest(&mut lower, opts.max_fill);
        keep_largest(&mut upper, opts.max_fill);
        lower.sort_by_key(|e| e.0);
        upper.sort_by_key(|e| e.0);
        upper.insert(0, (i, diag));
        lb.push_row(&lower);
        ub.push_row(&upper);
    }
    let l = lb.finish(n);
    let u = ub.finish(n);
    let fill = FillStats { nnz_a: a.nnz(), nnz_l: l.nnz(), nnz_u: u.nnz() };
    Ok(IlutFactors { l, u, droptol: opts.droptol, fill })
}

impl IlutFactors {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `P v = U⁻¹ L⁻¹ v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = v.clone();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = row.col_indices().iter().zip(row.values()).map(|(&j, &l)| l * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.u.row(i);
            let (cols, vals) = (row.col_indices(), row.values());
            let s: f64 = cols[1..].iter().zip(&vals[1..]).map(|(&j, &u)| u * x[j]).sum();
            x[i] = (x[i] - s) / vals[0];
        }
        x
    }

    /// Dense `L U` with the unit diagonal restored.
    pub fn product_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut l = nalgebra::DMatrix::identity(n, n);
        let mut u = nalgebra::DMatrix::zeros(n, n);
        for (i, j, &v) in self.l.triplet_iter() {
            l[(i, j)] = v;
        }
        for (i, j, &v) in self.u.triplet_iter() {
            u[(i, j)] = v;
        }
        l * u
    }
}
