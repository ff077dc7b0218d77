use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default half-width of a spike standing in for a Dirac mass.
pub const DEFAULT_SPIKE_HALF_WIDTH: f64 = 1e-3;

/// Uniform density on the hyper-rectangle center ± half_width.
///
/// Value (2·half_width)^{-dim} inside, 0 outside; integrates to one and is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeDensity {
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl SpikeDensity {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("spike center must be a non-empty finite vector"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid(format!("spike half-width must be finite and > 0, got {half_width}")));
        }
        Ok(Self { center, half_width })
    }

    pub fn scalar(center: f64, half_width: f64) -> Result<Self> {
        Self::new(vec![center], half_width)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Supremum of the density.
    pub fn sup(&self) -> f64 {
        (2.0 * self.half_width).powi(-(self.dim() as i32))
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim());
        let inside = y.iter().zip(&self.center).all(|(v, c)| (v - c).abs() <= self.half_width);
        if inside {
            self.sup()
        } else {
            0.0
        }
    }

    /// Lower and upper corner of the support in one dimension.
    pub fn support_1d(&self) -> (f64, f64) {
        (self.center[0] - self.half_width, self.center[0] + self.half_width)
    }
}

/// Contaminating density u on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContaminatingDensity {
    UniformWindow { a: f64, b: f64 },
    Spike(SpikeDensity),
}

impl ContaminatingDensity {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(invalid(format!("uniform window needs finite a < b, got [{a}, {b}]")));
        }
        Ok(ContaminatingDensity::UniformWindow { a, b })
    }

    pub fn spike(center: f64, half_width: f64) -> Result<Self> {
        Ok(ContaminatingDensity::Spike(SpikeDensity::scalar(center, half_width)?))
    }

    pub fn density(&self, y: f64) -> f64 {
        match self {
            ContaminatingDensity::UniformWindow { a, b } => {
                if *a <= y && y <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            ContaminatingDensity::Spike(s) => s.density(&[y]),
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ContaminatingDensity::UniformWindow { a, b } => (*a, *b),
            ContaminatingDensity::Spike(s) => s.support_1d(),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            ContaminatingDensity::UniformWindow { a, b } => 1.0 / (b - a),
            ContaminatingDensity::Spike(s) => s.sup(),
        }
    }
}

/// Which envelope a density represents; fixes where the spike must sit
/// relative to the event of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    /// Spike outside the event (contaminant gives it zero mass).
    Lower,
    /// Spike inside the event (contaminant gives it full mass).
    Upper,
}

/// y ↦ (1−ε)·base(y) + ε·spike(y).
#[derive(Debug, Clone)]
pub struct EnvelopeDensity<F> {
    pub kind: EnvelopeKind,
    pub epsilon: f64,
    base: F,
    spike: SpikeDensity,
}

impl<F: Fn(&[f64]) -> f64> EnvelopeDensity<F> {
    pub fn eval(&self, y: &[f64]) -> f64 {
        if self.epsilon == 0.0 {
            return (self.base)(y);
        }
        (1.0 - self.epsilon) * (self.base)(y) + self.epsilon * self.spike.density(y)
    }

    pub fn spike(&self) -> &SpikeDensity {
        &self.spike
    }
}

/// Lower or upper density of an ε-contaminated baseline for a given event.
///
/// The caller places `contaminant` outside the event for [`EnvelopeKind::Lower`]
/// and inside it for [`EnvelopeKind::Upper`]; the kind is recorded on the result.
pub fn envelope_density<F: Fn(&[f64]) -> f64>(
    kind: EnvelopeKind,
    base_pdf: F,
    epsilon: f64,
    contaminant: SpikeDensity,
) -> EnvelopeDensity<F> {
    EnvelopeDensity { kind, epsilon, base: base_pdf, spike: contaminant }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust_uq::{normal_cdf, std_normal_pdf};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    // Integral over [lo, hi] split at the spike edges so each piece is smooth.
    fn integrate_piecewise(f: impl Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
        let mut pts = vec![lo];
        pts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        // Evaluate just inside each piece so closed support edges are not counted twice.
        pts.windows(2)
            .map(|w| {
                let nudge = (w[1] - w[0]) * 1e-12;
                simpson(|y: f64| f(y.clamp(w[0] + nudge, w[1] - nudge)), w[0], w[1], 2000)
            })
            .sum()
    }

    #[test]
    fn spike_is_normalised_and_bounded() {
        let s = SpikeDensity::new(vec![0.0, 1.0], 0.25).unwrap();
        assert_eq!(s.sup(), 4.0);
        assert_eq!(s.density(&[0.1, 1.2]), 4.0);
        assert_eq!(s.density(&[0.3, 1.0]), 0.0);
        assert!(SpikeDensity::scalar(0.0, 0.0).is_err());
        assert!(SpikeDensity::new(vec![], 1.0).is_err());
    }

    #[test]
    fn zero_epsilon_is_identity() {
        let env = envelope_density(
            EnvelopeKind::Upper,
            |y: &[f64]| std_normal_pdf(y[0]),
            0.0,
            SpikeDensity::scalar(0.0, 0.1).unwrap(),
        );
        for y in [-2.0, 0.0, 0.05, 1.3] {
            assert_eq!(env.eval(&[y]), std_normal_pdf(y));
        }
    }

    #[test]
    fn lower_kind_mass_on_event() {
        let spike = SpikeDensity::scalar(5.0, 0.1).unwrap();
        let env = envelope_density(EnvelopeKind::Lower, |y: &[f64]| std_normal_pdf(y[0]), 0.2, spike);
        let got = integrate_piecewise(|y| env.eval(&[y]), 0.0, 1.0, &[4.9, 5.1]);
        let want = 0.8 * (normal_cdf(1.0) - normal_cdf(0.0));
        assert!((got - want).abs() < 1e-6);
        assert_eq!(env.kind, EnvelopeKind::Lower);
    }

    #[test]
    fn upper_kind_mass_on_event() {
        let spike = SpikeDensity::scalar(0.5, 0.1).unwrap();
        let env = envelope_density(EnvelopeKind::Upper, |y: &[f64]| std_normal_pdf(y[0]), 0.2, spike);
        let got = integrate_piecewise(|y| env.eval(&[y]), 0.0, 1.0, &[0.4, 0.6]);
        let want = 0.8 * (normal_cdf(1.0) - normal_cdf(0.0)) + 0.2;
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn contaminating_density_forms() {
        let u = ContaminatingDensity::uniform(-3.0, 3.0).unwrap();
        assert_eq!(u.density(0.0), 1.0 / 6.0);
        assert_eq!(u.density(3.5), 0.0);
        assert_eq!(u.support(), (-3.0, 3.0));
        assert!(ContaminatingDensity::uniform(1.0, 1.0).is_err());
        let s = ContaminatingDensity::spike(2.0, 0.5).unwrap();
        assert_eq!(s.density(2.4), 1.0);
        assert_eq!(s.sup(), 1.0);
    }
}
