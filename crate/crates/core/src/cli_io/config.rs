//! The single JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::experiments::{SweepConfig, TeacherConfig};
use crate::rf_core::{Activation, ModelConfig};

/// Model used by `fit` and `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub n: usize,
    pub n_features: usize,
    pub lambda: f64,
    pub phi: f64,
    pub activation: Activation,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { d: 32, n: 96, n_features: 64, lambda: 1e-8, phi: 4.0, activation: Activation::Relu }
    }
}

/// Every tunable of a run. Missing fields take the documented defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; also copied into the sweep section on resolution.
    pub seed: u64,
    pub model: ModelSection,
    /// Teacher for generated data. `None` resolves to the random-feature
    /// teacher (2d tanh features, noise_sd 0.5).
    pub teacher: Option<TeacherConfig>,
    pub sweep: SweepConfig,
    /// Huber outlier amplitude A; `None` resolves to 10·noise_sd.
    pub outlier_amplitude: Option<f64>,
    /// Exact minimum-norm fits (λ = 0, pseudoinverse on singular systems).
    pub pinv: bool,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub pinv: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("invalid config: {e}")))
    }

    /// Reads a config file; an unreadable file is an input error, not an I/O failure.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and fills every derived default, so the result
    /// fully determines a run.
    pub fn resolve(mut self, overrides: Overrides) -> Result<Self> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        self.pinv |= overrides.pinv;
        self.sweep.master_seed = self.seed;
        self.sweep.pinv |= self.pinv;
        if self.pinv {
            self.model.lambda = 0.0;
        }
        if let Some(t) = &self.teacher {
            t.validate()?;
        }
        if let Some(a) = self.outlier_amplitude {
            if !a.is_finite() {
                return Err(invalid(format!("outlier_amplitude must be finite, got {a}")));
            }
        }
        self.model_config()?;
        Ok(self)
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let m = &self.model;
        ModelConfig::new(m.d, m.n, m.n_features, m.lambda, m.phi, m.activation)
    }

    /// Teacher at dimension `d`, checking an explicit teacher agrees.
    pub fn teacher_for(&self, d: usize) -> Result<TeacherConfig> {
        match &self.teacher {
            Some(t) if t.d != d => Err(invalid(format!("teacher d={} does not match d={d}", t.d))),
            Some(t) => Ok(t.clone()),
            None => Ok(TeacherConfig::rf_default(d)),
        }
    }

    pub fn amplitude_for(&self, teacher: &TeacherConfig) -> f64 {
        self.outlier_amplitude.unwrap_or(10.0 * teacher.noise_sd)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}
