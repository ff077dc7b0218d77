use nalgebra::{DMatrix, DVector};

use super::{Activation, FeatureBank};
use crate::error::{invalid, Result};

/// Design matrix Z with Z[i][j] = σ(⟨x_i, θ_j⟩/√d).
pub fn feature_map(x: &DMatrix<f64>, bank: &FeatureBank, activation: Activation) -> Result<DMatrix<f64>> {
    let theta = bank.theta();
    if x.ncols() != theta.ncols() {
        return Err(invalid(format!(
            "input dimension {} does not match feature dimension {}",
            x.ncols(),
            theta.ncols()
        )));
    }
    let scale = 1.0 / (x.ncols() as f64).sqrt();
    let mut z = x * theta.transpose();
    z.apply(|v| *v = activation.apply(*v * scale));
    Ok(z)
}

/// Feature vector z̃ for a single input.
pub fn feature_vector(x: &DVector<f64>, bank: &FeatureBank, activation: Activation) -> Result<DVector<f64>> {
    let theta = bank.theta();
    if x.len() != theta.ncols() {
        return Err(invalid(format!("input dimension {} does not match feature dimension {}", x.len(), theta.ncols())));
    }
    let scale = 1.0 / (x.len() as f64).sqrt();
    let mut z = theta * x;
    z.apply(|v| *v = activation.apply(*v * scale));
    Ok(z)
}
