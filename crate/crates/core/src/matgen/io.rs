//! JSON containers for matrices and factors, and CSV export of dense
//! matrices. Matrix values are stored column-major.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LowRankFactors, PerturbationMatrix};
use crate::error::{Error, Result};

pub const FACTORS_FORMAT: &str = "ikegmres.factors.v1";
pub const MATRIX_FORMAT: &str = "ikegmres.matrix.v1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    /// Column-major values.
    pub values: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), values: m.as_slice().to_vec() }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.values.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix record holds {} values",
                self.rows,
                self.cols,
                self.values.len()
            )));
        }
        Ok(DMatrix::from_column_slice(self.rows, self.cols, &self.values))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorsRecord {
    pub format: String,
    pub n: usize,
    pub p: usize,
    pub u1: MatrixRecord,
    pub sigma1: Vec<f64>,
    pub v1: MatrixRecord,
    pub seed: u64,
    pub provenance: String,
}

impl FactorsRecord {
    pub fn from_factors(f: &LowRankFactors, provenance: &str) -> Self {
        Self {
            format: FACTORS_FORMAT.to_string(),
            n: f.n,
            p: f.p,
            u1: MatrixRecord::from_matrix(&f.u1),
            sigma1: f.sigma1.iter().copied().collect(),
            v1: MatrixRecord::from_matrix(&f.v1),
            seed: f.seed,
            provenance: provenance.to_string(),
        }
    }

    pub fn to_factors(&self) -> Result<LowRankFactors> {
        if self.format != FACTORS_FORMAT {
            return Err(Error::InvalidArgument(format!("unknown factors format '{}'", self.format)));
        }
        let u1 = self.u1.to_matrix()?;
        let v1 = self.v1.to_matrix()?;
        if u1.shape() != (self.n, self.p) {
            return Err(Error::Dimension(format!(
                "U1 is {}x{}, header says {}x{}",
                u1.nrows(),
                u1.ncols(),
                self.n,
                self.p
            )));
        }
        LowRankFactors::new(u1, DVector::from_vec(self.sigma1.clone()), v1, self.seed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseRecord {
    pub format: String,
    pub matrix: MatrixRecord,
    /// Spectral norm for perturbation matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub seed: u64,
    pub provenance: String,
}

impl DenseRecord {
    pub fn from_matrix(m: &DMatrix<f64>, seed: u64, provenance: &str) -> Self {
        Self {
            format: MATRIX_FORMAT.to_string(),
            matrix: MatrixRecord::from_matrix(m),
            eps: None,
            seed,
            provenance: provenance.to_string(),
        }
    }

    pub fn from_perturbation(e: &PerturbationMatrix, seed: u64, provenance: &str) -> Self {
        Self { eps: Some(e.eps), ..Self::from_matrix(&e.e, seed, provenance) }
    }
}

pub fn write_factors_json(path: &Path, f: &LowRankFactors, provenance: &str) -> Result<()> {
    let record = FactorsRecord::from_factors(f, provenance);
    std::fs::write(path, serde_json::to_string_pretty(&record)?)?;
    Ok(())
}

pub fn read_factors_json(path: &Path) -> Result<LowRankFactors> {
    let text = std::fs::read_to_string(path)?;
    let record: FactorsRecord = serde_json::from_str(&text)?;
    record.to_factors()
}

/// One row per line, comma separated, shortest round-trip float format.
pub fn write_matrix_csv<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgen::build_with_principal_angles;

    #[test]
    fn factors_json_round_trip() {
        let f = build_with_principal_angles(8, 2, &[0.3, 0.9], &[2.0, 1.0], 5).unwrap();
        let record = FactorsRecord::from_factors(&f, "test");
        let text = serde_json::to_string(&record).unwrap();
        let back: FactorsRecord = serde_json::from_str(&text).unwrap();
        let g = back.to_factors().unwrap();
        assert_eq!(g.u1, f.u1);
        assert_eq!(g.v1, f.v1);
        assert_eq!(g.sigma1, f.sigma1);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"rows":1,"cols":1,"values":[1.0],"extra":2}"#;
        assert!(serde_json::from_str::<MatrixRecord>(text).is_err());
    }

    #[test]
    fn csv_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 0.5]);
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1e0,2e0\n3e0,5e-1\n");
    }
}
