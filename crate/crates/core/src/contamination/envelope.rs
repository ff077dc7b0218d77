use serde::Serialize;

use super::{ContaminatingDensity, ContaminationBudget};
use crate::rf_core::{gaussian_pdf, PredictiveGaussian};

/// Pointwise bounds on the lower and upper posterior predictive densities.
///
/// These bound the true envelopes; they are not the envelopes themselves:
/// lower envelope ≤ `lower_bound_at`, upper envelope ≥ `upper_bound_at`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePair {
    pub base: PredictiveGaussian,
    pub budget: ContaminationBudget,
    pub u: ContaminatingDensity,
}

impl EnvelopePair {
    pub fn eta(&self) -> f64 {
        self.budget.eta
    }

    /// (1−η)·ℓ_pred(y).
    pub fn lower_bound_at(&self, y: f64) -> f64 {
        (1.0 - self.budget.eta) * gaussian_pdf(&self.base, y)
    }

    /// (1−η)·ℓ_pred(y) + η·u(y).
    pub fn upper_bound_at(&self, y: f64) -> f64 {
        self.lower_bound_at(y) + self.budget.eta * self.u.density(y)
    }
}

/// Builds the density bounds for a baseline predictive. ε does not enter the
/// bounds; it is carried along for reporting.
pub fn predictive_envelopes(
    base: PredictiveGaussian,
    budget: ContaminationBudget,
    u: ContaminatingDensity,
) -> EnvelopePair {
    if budget.eta >= 1.0 {
        log::warn!("eta = 1: lower predictive density bound is identically zero");
    }
    EnvelopePair { base, budget, u }
}
