use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One-dimensional Gaussian N(mean, variance) for a new response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveGaussian {
    pub mean: f64,
    pub variance: f64,
}

impl PredictiveGaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(invalid(format!("predictive mean must be finite, got {mean}")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(invalid(format!("predictive variance must be finite and > 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, variance: 1.0 }
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        gaussian_pdf(self, y)
    }
}

/// Normal density of `g` at `y`.
pub fn gaussian_pdf(g: &PredictiveGaussian, y: f64) -> f64 {
    let r = y - g.mean;
    (-0.5 * r * r / g.variance).exp() / (2.0 * std::f64::consts::PI * g.variance).sqrt()
}
