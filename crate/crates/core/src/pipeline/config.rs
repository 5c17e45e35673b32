use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::MAX_FEATURES;
use crate::mlp::{Damping, LmConfig, OutputActivation};
use crate::surf::{SurfParams, DEFAULT_HESSIAN_THRESHOLD};
use crate::svr::{KernelSpec, SvrConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Svr,
    Nn,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Svr => "svr",
            Estimator::Nn => "nn",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svr" => Ok(Estimator::Svr),
            "nn" => Ok(Estimator::Nn),
            _ => Err(Error::Config(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Hik,
    Linear,
    Rbf,
}

/// Flat key-value run configuration. Every key is optional in the TOML file
/// and overrides the default shown in [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hessian_threshold: f64,
    pub octaves: usize,
    pub upright: bool,

    pub kernel: KernelKind,
    pub rbf_gamma: f64,
    /// Fixed C; searched over the built-in grid when absent.
    pub svr_c: Option<f64>,
    /// Fixed epsilon; searched over the built-in grid when absent.
    pub svr_epsilon: Option<f64>,
    pub svr_tolerance: f64,
    pub svr_max_iterations: usize,
    /// Share of the SVR training part held out to score the grid.
    pub svr_val_fraction: f64,

    pub damping: Damping,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub output: OutputActivation,

    pub n_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub estimators: Vec<Estimator>,
    /// Target column of tabular datasets: a header name, a 0-based index or `last`.
    pub target: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let svr = SvrConfig::default();
        let lm = LmConfig::default();
        Self {
            hessian_threshold: DEFAULT_HESSIAN_THRESHOLD,
            octaves: 4,
            upright: false,
            kernel: KernelKind::Hik,
            rbf_gamma: 1.0,
            svr_c: None,
            svr_epsilon: None,
            svr_tolerance: svr.tolerance,
            svr_max_iterations: svr.max_iterations,
            svr_val_fraction: 0.2,
            damping: lm.damping,
            lambda0: lm.lambda0,
            lambda_up: lm.lambda_up,
            lambda_down: lm.lambda_down,
            max_epochs: lm.max_epochs,
            patience: lm.patience,
            output: OutputActivation::Sigmoid,
            n_values: (0..=MAX_FEATURES).collect(),
            seeds: vec![1, 2, 3, 4, 5],
            estimators: vec![Estimator::Svr, Estimator::Nn],
            target: "last".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Err(e) = self.surf_params().validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.kernel_spec().validate() {
            return bad(e.to_string());
        }
        let probe = SvrConfig {
            c: self.svr_c.unwrap_or(1.0),
            epsilon: self.svr_epsilon.unwrap_or(0.0),
            ..self.svr_base()
        };
        if let Err(e) = probe.validate() {
            return bad(e.to_string());
        }
        if !(self.svr_val_fraction > 0.0 && self.svr_val_fraction < 1.0) {
            return bad(format!("svr_val_fraction must be in (0, 1), got {}", self.svr_val_fraction));
        }
        if let Err(e) = self.lm_config(0).validate() {
            return bad(e.to_string());
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n > MAX_FEATURES) {
            return bad(format!("n_values must be non-empty and each at most {MAX_FEATURES}"));
        }
        if self.seeds.is_empty() || self.estimators.is_empty() {
            return bad("seeds and estimators must be non-empty".into());
        }
        Ok(())
    }

    pub fn surf_params(&self) -> SurfParams {
        SurfParams {
            hessian_threshold: self.hessian_threshold,
            octaves: self.octaves,
            upright: self.upright,
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self.kernel {
            KernelKind::Hik => KernelSpec::HistogramIntersection,
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Rbf => KernelSpec::Rbf { gamma: self.rbf_gamma },
        }
    }

    /// SVR settings other than C and epsilon.
    pub fn svr_base(&self) -> SvrConfig {
        SvrConfig {
            tolerance: self.svr_tolerance,
            max_iterations: self.svr_max_iterations,
            ..SvrConfig::default()
        }
    }

    pub fn lm_config(&self, seed: u64) -> LmConfig {
        LmConfig {
            damping: self.damping,
            lambda0: self.lambda0,
            lambda_up: self.lambda_up,
            lambda_down: self.lambda_down,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
