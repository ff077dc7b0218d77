//! Huber-type label corruption: each label is shifted by +A with probability ρ.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contamination::budget::check_unit;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberCorruption {
    pub rho: f64,
    pub amplitude: f64,
}

impl HuberCorruption {
    pub fn new(rho: f64, amplitude: f64) -> Result<Self> {
        check_unit("rho", rho)?;
        if !amplitude.is_finite() {
            return Err(invalid(format!("amplitude must be finite, got {amplitude}")));
        }
        Ok(Self { rho, amplitude })
    }
}

/// Returns the corrupted labels and the mask of shifted entries.
///
/// One uniform is drawn per entry whatever ρ is, so for a fixed stream the
/// masks are nested across ρ levels.
pub fn huber_contaminate<R: Rng + ?Sized>(
    y: &DVector<f64>,
    corr: &HuberCorruption,
    rng: &mut R,
) -> (DVector<f64>, Vec<bool>) {
    let mut out = y.clone();
    let mut mask = vec![false; y.len()];
    for (v, m) in out.iter_mut().zip(mask.iter_mut()) {
        let u: f64 = rng.random();
        if u < corr.rho {
            *v += corr.amplitude;
            *m = true;
        }
    }
    (out, mask)
}
