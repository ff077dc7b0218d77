use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Nonlinearity applied to the projected inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Tanh => t.tanh(),
        }
    }
}

/// Dimensions and hyperparameters of one random-feature model.
///
/// The ratios ψ1 = N/d and ψ2 = n/d are always derived from the counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Ambient input dimension.
    pub d: usize,
    /// Training sample count.
    pub n: usize,
    /// Random feature count N.
    pub n_features: usize,
    /// Ridge penalty λ.
    pub lambda: f64,
    /// Observation-noise precision φ.
    pub phi: f64,
    #[serde(default)]
    pub activation: Activation,
}

impl ModelConfig {
    pub fn new(d: usize, n: usize, n_features: usize, lambda: f64, phi: f64, activation: Activation) -> Result<Self> {
        let cfg = Self { d, n, n_features, lambda, phi, activation };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.n_features == 0 {
            return Err(invalid(format!(
                "d, n and N must be positive (got d={}, n={}, N={})",
                self.d, self.n, self.n_features
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return Err(invalid(format!("phi must be finite and > 0, got {}", self.phi)));
        }
        Ok(())
    }

    /// ψ1 = N/d.
    pub fn psi1(&self) -> f64 {
        self.n_features as f64 / self.d as f64
    }

    /// ψ2 = n/d.
    pub fn psi2(&self) -> f64 {
        self.n as f64 / self.d as f64
    }

    /// Effective ridge weight d·ψ1·ψ2·λ multiplying ‖a‖² in the training objective.
    ///
    /// The posterior is parameterised by this quantity directly: prior
    /// covariance φ⁻¹·(d·ψ1·ψ2·λ)⁻¹·I makes the MAP coincide with the ridge
    /// solution.
    pub fn regularizer(&self) -> f64 {
        self.d as f64 * self.psi1() * self.psi2() * self.lambda
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_features(mut self, n_features: usize) -> Self {
        self.n_features = n_features;
        self
    }
}
