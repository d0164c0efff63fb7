//! Experiment configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flexspec_core::tent::DEFAULT_DELTA;
use flexspec_core::BoundaryCondition;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Invariants,
    FlexSample,
    TentBuild,
    TentVerify,
    Coeffs,
    SpectrumSolve,
    SpectrumSweep,
    VerifyWeyl,
    Corner,
    Theorem1Demo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Family file, tent construction file, or `builtin:<name>`.
    #[serde(default)]
    pub family: Option<String>,
    /// Polygon file (JSON vertex loop) or `builtin:<name>`.
    #[serde(default)]
    pub polygon: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    #[serde(default = "default_k_range")]
    pub k_range: [f64; 2],
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output file name inside `out_dir` (kind-specific default otherwise).
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_samples() -> usize {
    50
}
fn default_h() -> f64 {
    0.02
}
fn default_n() -> usize {
    10
}
fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}
fn default_k_range() -> [f64; 2] {
    [10.0, 40.0]
}
fn default_lambda_max() -> f64 {
    1600.0
}
pub fn default_seed() -> u64 {
    0x5eed
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("flexspec-out")
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            family: None,
            polygon: None,
            epsilon: default_epsilon(),
            delta: default_delta(),
            samples: default_samples(),
            h: default_h(),
            n: default_n(),
            bc: default_bc(),
            k_range: default_k_range(),
            lambda_max: default_lambda_max(),
            seed: default_seed(),
            out: None,
            out_dir: default_out_dir(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).with_context(|| format!("reading {}", path.as_ref().display()))?;
        let cfg: Self = serde_json::from_str(&text).context("parsing experiment config")?;
        Ok(cfg)
    }

    /// Range checks and file existence.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            bail!("epsilon = {} outside (0, 1]", self.epsilon);
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            bail!("delta = {} outside (0, 1]", self.delta);
        }
        if !(1..=100_000).contains(&self.samples) {
            bail!("samples = {} outside 1..=100000", self.samples);
        }
        if !(self.h > 0.0 && self.h <= 10.0) {
            bail!("h = {} outside (0, 10]", self.h);
        }
        if !(1..=5000).contains(&self.n) {
            bail!("n = {} outside 1..=5000", self.n);
        }
        if !(self.k_range[0] > 0.0 && self.k_range[1] > self.k_range[0]) {
            bail!("k range {:?} is empty", self.k_range);
        }
        if !(self.lambda_max > 0.0) {
            bail!("lambda_max = {} must be positive", self.lambda_max);
        }
        let needs_family = matches!(
            self.kind,
            ExperimentKind::Invariants
                | ExperimentKind::FlexSample
                | ExperimentKind::TentBuild
                | ExperimentKind::TentVerify
                | ExperimentKind::Coeffs
                | ExperimentKind::SpectrumSweep
                | ExperimentKind::Theorem1Demo
        );
        let needs_polygon = matches!(
            self.kind,
            ExperimentKind::SpectrumSolve | ExperimentKind::VerifyWeyl | ExperimentKind::Corner
        );
        check_source("family", self.family.as_deref(), needs_family)?;
        check_source("polygon", self.polygon.as_deref(), needs_polygon)?;
        Ok(())
    }

    /// SHA-256 of the configuration without the output location, as 16 hex digits.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.out = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        format!("{digest:x}")[..16].to_string()
    }
}

fn check_source(what: &str, value: Option<&str>, required: bool) -> Result<()> {
    match value {
        None if required => bail!("a {what} is required"),
        Some(v) if !v.starts_with("builtin:") && !Path::new(v).exists() => bail!("{what} file {v} does not exist"),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(ExperimentKind::Theorem1Demo);
        assert!(c.validate().is_err());
        c.family = Some("builtin:steffen".into());
        c.validate().unwrap();
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
        c.epsilon = 0.05;
        c.family = Some("/nonexistent/family.json".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = ExperimentConfig::new(ExperimentKind::Coeffs);
        a.family = Some("builtin:steffen".into());
        let mut b = a.clone();
        b.out_dir = PathBuf::from("/tmp/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn json_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"kind": "spectrum-solve", "polygon": "builtin:square"}"#).unwrap();
        assert_eq!(c.h, 0.02);
        assert_eq!(c.bc, BoundaryCondition::Dirichlet);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind": "coeffs", "typo": 1}"#).is_err());
    }
}
