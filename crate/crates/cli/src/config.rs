//! Experiment configuration: a TOML file with a strict schema, overlaid by
//! command-line flags with the same names.

use std::path::{Path, PathBuf};

use ikegmres::matgen::families;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1,
    Fig2,
    #[serde(alias = "example1")]
    #[value(alias = "example1")]
    Ex1,
    #[serde(alias = "example2")]
    #[value(alias = "example2")]
    Ex2,
    Pde,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Ex1 => "ex1",
            Self::Ex2 => "ex2",
            Self::Pde => "pde",
        }
    }
}

/// Every key is optional; unset keys take the per-experiment default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Seed of the matrix family and right-hand side.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of random perturbations per ε.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Perturbation norms ‖E‖₂.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Pseudospectral levels δ.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    /// Largest GMRES step for which bounds are evaluated.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    /// Absolute GMRES tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Grid nodes along the long side of each contour window.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Mesh parameter N of the PDE (h = 1/N).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<usize>,
    /// ILUT drop tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub droptol: Option<f64>,
    /// Relative nonlinear tolerance for Broyden.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nl_tol: Option<f64>,
    /// Largest number of Broyden steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nl_maxit: Option<usize>,
}

impl Overrides {
    /// `other` wins wherever it sets a key.
    pub fn overlay(self, other: Overrides) -> Overrides {
        Overrides {
            seed: other.seed.or(self.seed),
            trials: other.trials.or(self.trials),
            eps: other.eps.or(self.eps),
            delta: other.delta.or(self.delta),
            m_max: other.m_max.or(self.m_max),
            tol: other.tol.or(self.tol),
            resolution: other.resolution.or(self.resolution),
            mesh: other.mesh.or(self.mesh),
            droptol: other.droptol.or(self.droptol),
            nl_tol: other.nl_tol.or(self.nl_tol),
            nl_maxit: other.nl_maxit.or(self.nl_maxit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentId>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub overrides: Overrides,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Fully resolved parameters of one reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub trials: usize,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub m_max: usize,
    pub tol: f64,
    pub resolution: usize,
    pub mesh: usize,
    pub droptol: f64,
    pub nl_tol: f64,
    pub nl_maxit: usize,
}

/// Broyden step cap of the PDE runs.
pub const PDE_NL_MAXIT: usize = 100;

fn decades(exponents: &[f64]) -> Vec<f64> {
    exponents.iter().map(|e| 10f64.powf(*e)).collect()
}

impl ExperimentConfig {
    pub fn resolve(experiment: ExperimentId, output_dir: PathBuf, o: Overrides) -> Result<Self, CliError> {
        let default_eps = match experiment {
            ExperimentId::Fig1 | ExperimentId::Fig2 => families::FIG1_EPS.to_vec(),
            ExperimentId::Ex1 => families::EXAMPLE1_EPS.to_vec(),
            ExperimentId::Ex2 => families::EXAMPLE2_EPS.to_vec(),
            ExperimentId::Pde => vec![],
        };
        let broyden = ikegmres::pde::BroydenOptions::default();
        let cfg = Self {
            experiment,
            output_dir,
            seed: o.seed.unwrap_or(families::DEFAULT_SEED),
            trials: o.trials.unwrap_or(100),
            eps: o.eps.unwrap_or(default_eps),
            delta: o.delta.unwrap_or_else(|| decades(&[-2.0, -2.5, -3.0])),
            m_max: o.m_max.unwrap_or(10),
            tol: o.tol.unwrap_or(1e-10),
            resolution: o.resolution.unwrap_or(129),
            mesh: o.mesh.unwrap_or(201),
            droptol: o.droptol.unwrap_or(ikegmres::pde::DEFAULT_DROPTOL),
            nl_tol: o.nl_tol.unwrap_or(broyden.nl_tol),
            nl_maxit: o.nl_maxit.unwrap_or(PDE_NL_MAXIT),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every resolved key as an explicit override.
    pub fn into_overrides(self) -> Overrides {
        Overrides {
            seed: Some(self.seed),
            trials: Some(self.trials),
            eps: Some(self.eps),
            delta: Some(self.delta),
            m_max: Some(self.m_max),
            tol: Some(self.tol),
            resolution: Some(self.resolution),
            mesh: Some(self.mesh),
            droptol: Some(self.droptol),
            nl_tol: Some(self.nl_tol),
            nl_maxit: Some(self.nl_maxit),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("eps {e} must lie in (0, 1)"));
        }
        if let Some(d) = self.delta.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return bad(format!("delta {d} must be positive"));
        }
        if self.trials == 0 && matches!(self.experiment, ExperimentId::Fig2 | ExperimentId::Ex1 | ExperimentId::Ex2) {
            return bad("trials must be at least 1".into());
        }
        if !(self.tol > 0.0) || !(self.nl_tol > 0.0) || !(self.droptol >= 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.m_max == 0 {
            return bad("m_max must be at least 1".into());
        }
        if self.resolution < 16 {
            return bad(format!("resolution {} is below the minimum of 16", self.resolution));
        }
        if self.mesh < 4 {
            return bad(format!("mesh {} is below the minimum of 4", self.mesh));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ConfigFile::parse("experiment = \"fig1\"\n[overrides]\nsed = 3\n").is_err());
        assert!(ConfigFile::parse("experment = \"fig1\"\n").is_err());
        let ok = ConfigFile::parse("experiment = \"ex1\"\n[overrides]\nseed = 3\neps = [1e-3]\n").unwrap();
        assert_eq!(ok.experiment, Some(ExperimentId::Ex1));
        assert_eq!(ok.overrides.seed, Some(3));
    }

    #[test]
    fn flags_override_the_file() {
        let file = Overrides { seed: Some(1), trials: Some(5), ..Default::default() };
        let flags = Overrides { seed: Some(2), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.trials, Some(5));
    }

    #[test]
    fn defaults_follow_the_experiment() {
        let c = ExperimentConfig::resolve(ExperimentId::Ex2, "out".into(), Overrides::default()).unwrap();
        assert_eq!(c.eps, families::EXAMPLE2_EPS.to_vec());
        assert_eq!(c.delta.len(), 3);
        assert_eq!(c.seed, families::DEFAULT_SEED);
        let bad = Overrides { eps: Some(vec![1.5]), ..Default::default() };
        assert!(ExperimentConfig::resolve(ExperimentId::Fig2, "out".into(), bad).is_err());
    }
}
