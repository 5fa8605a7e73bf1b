//! Study configuration: a flat TOML document plus command-line overrides.
//!
//! ```toml
//! scheme = "BDM1-P0"
//! dim = 2
//! ell = "one"            # one | varpi | zero
//! levels = [6, 12, 24]
//! formulation = "both"   # mfe | ms-mfe | both
//! tol = 1e-10
//! output_dir = "out"
//! mesh_files = []        # optional .msh file per level
//! mu_sigma = 1.0
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use cosserat_core::assembly::{Formulation, SchemeName};
use cosserat_core::model::{LengthScale, MaterialParams};
use serde::{Deserialize, Serialize};

use crate::StudyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EllCase {
    One,
    Varpi,
    Zero,
}

impl EllCase {
    pub fn length_scale(self) -> LengthScale {
        match self {
            EllCase::One => LengthScale::Constant(1.0),
            EllCase::Varpi => LengthScale::SmoothStep,
            EllCase::Zero => LengthScale::Constant(0.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EllCase::One => "one",
            EllCase::Varpi => "varpi",
            EllCase::Zero => "zero",
        }
    }
}

impl FromStr for EllCase {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "one" | "1" => Ok(EllCase::One),
            "varpi" | "smooth" => Ok(EllCase::Varpi),
            "zero" | "0" => Ok(EllCase::Zero),
            _ => Err(StudyError::Config(format!("unknown length scale case '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationChoice {
    Mfe,
    MsMfe,
    Both,
}

impl FormulationChoice {
    pub fn formulations(self) -> Vec<Formulation> {
        match self {
            FormulationChoice::Mfe => vec![Formulation::Mfe],
            FormulationChoice::MsMfe => vec![Formulation::MsMfe],
            FormulationChoice::Both => vec![Formulation::Mfe, Formulation::MsMfe],
        }
    }
}

impl FromStr for FormulationChoice {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mfe" => Ok(FormulationChoice::Mfe),
            "ms-mfe" | "msmfe" => Ok(FormulationChoice::MsMfe),
            "both" => Ok(FormulationChoice::Both),
            _ => Err(StudyError::Config(format!("unknown formulation '{s}'"))),
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}

/// Raw file contents; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<String>,
    pub dim: Option<usize>,
    pub ell: Option<String>,
    pub levels: Option<Vec<usize>>,
    pub formulation: Option<String>,
    pub tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub mesh_files: Option<Vec<PathBuf>>,
    pub mu_sigma: Option<f64>,
    pub mu_c_sigma: Option<f64>,
    pub lambda_sigma: Option<f64>,
    pub mu_omega: Option<f64>,
    pub mu_c_omega: Option<f64>,
    pub lambda_omega: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|e| StudyError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, StudyError> {
        toml::from_str(text).map_err(|e| StudyError::Config(e.to_string()))
    }

    /// Fields set in `other` replace those of `self`.
    pub fn merge(mut self, other: ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if other.$f.is_some() { self.$f = other.$f; })*
            };
        }
        take!(
            scheme,
            dim,
            ell,
            levels,
            formulation,
            tol,
            output_dir,
            mesh_files,
            mu_sigma,
            mu_c_sigma,
            lambda_sigma,
            mu_omega,
            mu_c_omega,
            lambda_omega
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scheme: SchemeName,
    pub dim: usize,
    pub ell: EllCase,
    pub levels: Vec<usize>,
    pub formulation: FormulationChoice,
    pub tol: f64,
    pub output_dir: Option<PathBuf>,
    pub mesh_files: Vec<PathBuf>,
    pub params: MaterialParams,
}

/// Default refinement ladder for a scheme and dimension.
pub fn default_levels(scheme: SchemeName, dim: usize) -> Vec<usize> {
    let rt = matches!(scheme, SchemeName::Rt1L1 | SchemeName::Rt1P1);
    match (dim, rt) {
        (2, false) => vec![6, 12, 24, 48],
        (2, true) => vec![6, 12, 24],
        (_, false) => vec![3, 6, 9],
        (_, true) => vec![3, 6],
    }
}

impl StudyConfig {
    /// Config with default ladder and parameters.
    pub fn new(scheme: SchemeName, dim: usize, ell: EllCase) -> Self {
        StudyConfig {
            scheme,
            dim,
            ell,
            levels: default_levels(scheme, dim),
            formulation: FormulationChoice::Both,
            tol: default_tol(),
            output_dir: None,
            mesh_files: Vec::new(),
            params: MaterialParams::default(),
        }
    }

    pub fn with_levels(mut self, levels: &[usize]) -> Self {
        self.levels = levels.to_vec();
        self
    }

    pub fn with_formulation(mut self, f: FormulationChoice) -> Self {
        self.formulation = f;
        self
    }

    pub fn from_file(file: ConfigFile) -> Result<Self, StudyError> {
        let scheme: SchemeName = file
            .scheme
            .as_deref()
            .ok_or_else(|| StudyError::Config("missing key 'scheme'".into()))?
            .parse()
            .map_err(|e: cosserat_core::Error| StudyError::Config(e.to_string()))?;
        let dim = file.dim.unwrap_or(2);
        let ell = match file.ell.as_deref() {
            Some(s) => s.parse()?,
            None => EllCase::One,
        };
        let mut cfg = StudyConfig::new(scheme, dim, ell);
        if let Some(levels) = file.levels {
            cfg.levels = levels;
        }
        if let Some(f) = file.formulation.as_deref() {
            cfg.formulation = f.parse()?;
        }
        if let Some(t) = file.tol {
            cfg.tol = t;
        }
        cfg.output_dir = file.output_dir;
        cfg.mesh_files = file.mesh_files.unwrap_or_default();
        let p = &mut cfg.params;
        for (slot, v) in [
            (&mut p.mu_sigma, file.mu_sigma),
            (&mut p.mu_c_sigma, file.mu_c_sigma),
            (&mut p.lambda_sigma, file.lambda_sigma),
            (&mut p.mu_omega, file.mu_omega),
            (&mut p.mu_c_omega, file.mu_c_omega),
            (&mut p.lambda_omega, file.lambda_omega),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(StudyError::Config(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.levels.is_empty() && self.mesh_files.is_empty() {
            return Err(StudyError::Config("no refinement levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StudyError::Config("levels must be strictly increasing".into()));
        }
        if !self.mesh_files.is_empty() && !self.levels.is_empty() && self.mesh_files.len() != self.levels.len() {
            return Err(StudyError::Config(format!(
                "{} mesh files for {} levels",
                self.mesh_files.len(),
                self.levels.len()
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(StudyError::Config(format!("tol must lie in (0, 1e-4], got {}", self.tol)));
        }
        self.params.validate().map_err(StudyError::Config)
    }

    /// Number of levels actually run.
    pub fn num_levels(&self) -> usize {
        if self.mesh_files.is_empty() {
            self.levels.len()
        } else {
            self.mesh_files.len()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_overrides_merge() {
        let base = ConfigFile::parse("scheme = \"rt1-l1\"\nlevels = [6, 12]\nell = \"zero\"\n").unwrap();
        let over = ConfigFile {
            levels: Some(vec![3, 6, 9]),
            ..Default::default()
        };
        let cfg = StudyConfig::from_file(base.merge(over)).unwrap();
        assert_eq!(cfg.scheme, SchemeName::Rt1L1);
        assert_eq!(cfg.levels, vec![3, 6, 9]);
        assert_eq!(cfg.ell, EllCase::Zero);
        assert_eq!(cfg.formulation, FormulationChoice::Both);
    }

    #[test]
    fn unknown_keys_and_bad_ladders_are_rejected() {
        assert!(ConfigFile::parse("schema = \"x\"").is_err());
        let f = ConfigFile::parse("scheme = \"BDM1-P0\"\nlevels = [12, 6]").unwrap();
        assert!(StudyConfig::from_file(f).is_err());
    }
}
