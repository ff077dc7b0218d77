use serde::Serialize;

use super::normal::{normal_cdf, normal_sf, std_normal_pdf};
use crate::error::{invalid, Error, Result};
use crate::rf_core::PredictiveGaussian;

/// Default half-width of the truncation window in predictive standard deviations.
pub const DEFAULT_TRUNCATION_K: f64 = 3.0;

/// Interval [a, b] on which the predictive is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationWindow {
    pub a: f64,
    pub b: f64,
    /// (k, s) when built as mean ± k·s.
    #[serde(skip)]
    symmetric: Option<(f64, f64)>,
}

impl TruncationWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(invalid(format!("truncation window needs finite a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b, symmetric: None })
    }

    /// [mean − k·s, mean + k·s] for the predictive `base`.
    pub fn symmetric(base: &PredictiveGaussian, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(invalid(format!("truncation k must be finite and > 0, got {k}")));
        }
        let s = base.sd();
        let mut w = Self::new(base.mean - k * s, base.mean + k * s)?;
        w.symmetric = Some((k, s));
        Ok(w)
    }

    pub fn k(&self) -> Option<f64> {
        self.symmetric.map(|(k, _)| k)
    }

    /// (b − a)²/12, the variance of the uniform density on the window.
    /// Equals k²s²/3 exactly for symmetric windows.
    pub fn uniform_variance(&self) -> f64 {
        match self.symmetric {
            Some((k, s)) => k * k * s * s / 3.0,
            None => (self.b - self.a).powi(2) / 12.0,
        }
    }

    pub fn uniform_density(&self, y: f64) -> f64 {
        if self.a <= y && y <= self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }

    /// Baseline predictive mass retained inside the window.
    pub fn retained_mass(&self, base: &PredictiveGaussian) -> f64 {
        let s = base.sd();
        standardized_mass((self.a - base.mean) / s, (self.b - base.mean) / s)
    }
}

fn standardized_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_cdf(lo) - normal_sf(hi)
    }
}

/// Upper bound (1−η)·s² on the lower predictive variance.
pub fn lower_variance_bound(base: &PredictiveGaussian, eta: f64) -> f64 {
    (1.0 - eta) * base.variance
}

/// Variance of N(mean, s²) restricted and renormalised to [a, b].
pub fn truncated_normal_variance(base: &PredictiveGaussian, window: &TruncationWindow) -> Result<f64> {
    let s = base.sd();
    let lo = (window.a - base.mean) / s;
    let hi = (window.b - base.mean) / s;
    let z = standardized_mass(lo, hi);
    if !(z >= 1e-300) {
        return Err(Error::NumericDegeneracy(format!(
            "window [{}, {}] carries mass {z:e} under the predictive",
            window.a, window.b
        )));
    }
    let (pl, ph) = (std_normal_pdf(lo), std_normal_pdf(hi));
    let shift = (pl - ph) / z;
    let v = 1.0 + (lo * pl - hi * ph) / z - shift * shift;
    Ok(base.variance * v.max(0.0))
}

/// (1−η)·V'_base + η·(b−a)²/12, the lower bound on the upper predictive
/// variance under the truncation approximation.
pub fn upper_variance_bound(base: &PredictiveGaussian, eta: f64, window: &TruncationWindow) -> Result<f64> {
    Ok((1.0 - eta) * truncated_normal_variance(base, window)? + eta * window.uniform_variance())
}

/// The four variance quantities and the width condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceChain {
    /// (1−η)·V_base.
    pub lower_bound: f64,
    /// V_base = s².
    pub base: f64,
    /// V'_base, variance of the truncated predictive.
    pub truncated_base: f64,
    /// (1−η)·V'_base + η·(b−a)²/12.
    pub upper_bound: f64,
    /// (b−a)²/12 ≥ V_base.
    pub condition_ok: bool,
    /// |V_base − V'_base|, the size of the truncation approximation.
    pub truncation_gap: f64,
    #[serde(skip)]
    eta: f64,
    #[serde(skip)]
    uniform_variance: f64,
}

impl VarianceChain {
    /// lower_bound ≤ base ≤ upper_bound, with the truncated base in the upper bound.
    ///
    /// Can fail even when `condition_ok` holds: for small η the shrinkage of
    /// the truncated variance outweighs η·(b−a)²/12.
    pub fn ordering_holds(&self) -> bool {
        self.lower_bound <= self.base && self.base <= self.upper_bound
    }

    /// lower_bound ≤ base ≤ (1−η)·base + η·(b−a)²/12, the chain before the
    /// truncation approximation. Guaranteed whenever `condition_ok`.
    pub fn exact_ordering_holds(&self) -> bool {
        self.lower_bound <= self.base && self.base <= self.untruncated_upper_bound()
    }

    pub fn untruncated_upper_bound(&self) -> f64 {
        (1.0 - self.eta) * self.base + self.eta * self.uniform_variance
    }
}

pub fn variance_chain(base: &PredictiveGaussian, eta: f64, window: &TruncationWindow) -> Result<VarianceChain> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    let truncated_base = truncated_normal_variance(base, window)?;
    let uniform_variance = window.uniform_variance();
    Ok(VarianceChain {
        lower_bound: lower_variance_bound(base, eta),
        base: base.variance,
        truncated_base,
        upper_bound: (1.0 - eta) * truncated_base + eta * uniform_variance,
        condition_ok: uniform_variance >= base.variance,
        truncation_gap: (base.variance - truncated_base).abs(),
        eta,
        uniform_variance,
    })
}
