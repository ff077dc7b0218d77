use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Prior (ε) and likelihood (η) contamination levels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContaminationBudget {
    pub epsilon: f64,
    pub eta: f64,
}

impl ContaminationBudget {
    pub fn new(epsilon: f64, eta: f64) -> Result<Self> {
        check_unit("epsilon", epsilon)?;
        check_unit("eta", eta)?;
        Ok(Self { epsilon, eta })
    }
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Lower probability of an event under ε-contamination: 1 on the full space,
/// (1−ε)·P(A) otherwise.
pub fn lower_set_prob(base_prob: f64, epsilon: f64, is_full_space: bool) -> Result<f64> {
    check_unit("probability", base_prob)?;
    check_unit("epsilon", epsilon)?;
    Ok(if is_full_space { 1.0 } else { (1.0 - epsilon) * base_prob })
}

/// Upper probability of an event under ε-contamination: 0 on the empty set,
/// (1−ε)·P(A) + ε otherwise.
pub fn upper_set_prob(base_prob: f64, epsilon: f64, is_empty: bool) -> Result<f64> {
    check_unit("probability", base_prob)?;
    check_unit("epsilon", epsilon)?;
    Ok(if is_empty { 0.0 } else { (1.0 - epsilon) * base_prob + epsilon })
}
