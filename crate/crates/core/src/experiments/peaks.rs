//! Contamination envelopes around a variance curve and peak location.

use serde::Serialize;

use crate::contamination::budget::check_unit;
use crate::error::{invalid, Result};
use crate::rf_core::PredictiveGaussian;
use crate::robust_uq::{truncated_normal_variance, TruncationWindow};

/// Global maximiser of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    pub argmax_psi1: f64,
    pub max_value: f64,
    pub argmax_index: usize,
}

/// Index of the largest value; ties go to the smallest ψ1.
pub(crate) fn argmax_index(curve: &[(f64, f64)]) -> Result<usize> {
    if curve.is_empty() {
        return Err(invalid("curve is empty"));
    }
    if curve.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
        return Err(invalid("curve contains non-finite entries"));
    }
    let mut best = 0;
    for (i, (p, v)) in curve.iter().enumerate().skip(1) {
        let (bp, bv) = curve[best];
        if *v > bv || (*v == bv && *p < bp) {
            best = i;
        }
    }
    Ok(best)
}

pub fn peak_report(curve: &[(f64, f64)]) -> Result<PeakReport> {
    if curve.len() < 3 {
        return Err(invalid(format!("peak_report needs at least 3 points, got {}", curve.len())));
    }
    let i = argmax_index(curve)?;
    Ok(PeakReport { argmax_psi1: curve[i].0, max_value: curve[i].1, argmax_index: i })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub psi1: f64,
    pub eta: f64,
    pub base_variance: f64,
    /// (1−η)·V.
    pub lower: f64,
    /// (1−η)·V' + η·(b−a)²/12 on the window mean ± k·√V.
    pub upper: f64,
    /// This ψ1 maximises both envelopes at this η.
    pub argmax_flag: bool,
}

/// Argmax indices of the base curve and of both envelopes at one η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePeaks {
    pub eta: f64,
    pub base_index: usize,
    pub lower_index: usize,
    pub upper_index: usize,
}

impl EnvelopePeaks {
    pub fn aligned(&self) -> bool {
        self.base_index == self.lower_index && self.base_index == self.upper_index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeTable {
    /// Sorted by (ψ1, η).
    pub rows: Vec<EnvelopeRow>,
    /// One entry per η, in input order.
    pub peaks: Vec<EnvelopePeaks>,
}

/// Lower and upper variance envelopes for every (ψ1, η).
///
/// With a window of ±k predictive standard deviations both envelopes are the
/// base variance times a constant depending on (η, k) only, so they share
/// the base curve's argmax.
pub fn contamination_envelope_curves(
    base_variance_curve: &[(f64, f64)],
    eta_levels: &[f64],
    k: f64,
) -> Result<EnvelopeTable> {
    if base_variance_curve.is_empty() {
        return Err(invalid("base variance curve is empty"));
    }
    if base_variance_curve.iter().any(|(p, v)| !p.is_finite() || !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("base variance curve needs finite psi1 and finite non-negative variances"));
    }
    for e in eta_levels {
        check_unit("eta", *e)?;
    }
    let unit = PredictiveGaussian::standard();
    let window = TruncationWindow::symmetric(&unit, k)?;
    let truncated = truncated_normal_variance(&unit, &window)?;
    let uniform = window.uniform_variance();

    let mut rows = Vec::with_capacity(base_variance_curve.len() * eta_levels.len());
    let mut peaks = Vec::with_capacity(eta_levels.len());
    for &eta in eta_levels {
        let lower_factor = 1.0 - eta;
        let upper_factor = (1.0 - eta) * truncated + eta * uniform;
        let start = rows.len();
        for &(psi1, v) in base_variance_curve {
            rows.push(EnvelopeRow {
                psi1,
                eta,
                base_variance: v,
                lower: lower_factor * v,
                upper: upper_factor * v,
                argmax_flag: false,
            });
        }
        let block = &rows[start..];
        let pick = |f: fn(&EnvelopeRow) -> f64| argmax_index(&block.iter().map(|r| (r.psi1, f(r))).collect::<Vec<_>>());
        let p = EnvelopePeaks {
            eta,
            base_index: pick(|r| r.base_variance)?,
            lower_index: pick(|r| r.lower)?,
            upper_index: pick(|r| r.upper)?,
        };
        if p.lower_index == p.upper_index {
            rows[start + p.lower_index].argmax_flag = true;
        }
        peaks.push(p);
    }
    rows.sort_by(|a, b| a.psi1.total_cmp(&b.psi1).then(a.eta.total_cmp(&b.eta)));
    Ok(EnvelopeTable { rows, peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust_uq::variance_chain;
    use proptest::prelude::*;

    fn curve(values: &[f64]) -> Vec<(f64, f64)> {
        values.iter().enumerate().map(|(i, v)| (0.5 * (i + 1) as f64, *v)).collect()
    }

    #[test]
    fn peak_of_increasing_curve_is_last() {
        let r = peak_report(&curve(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!((r.argmax_index, r.max_value, r.argmax_psi1), (3, 4.0, 2.0));
    }

    #[test]
    fn interior_peak_and_ties() {
        assert_eq!(peak_report(&curve(&[1.0, 5.0, 2.0])).unwrap().argmax_index, 1);
        assert_eq!(peak_report(&curve(&[1.0, 5.0, 5.0, 2.0])).unwrap().argmax_index, 1);
        let unsorted = vec![(3.0, 5.0), (1.0, 5.0), (2.0, 1.0)];
        assert_eq!(peak_report(&unsorted).unwrap().argmax_psi1, 1.0);
    }

    #[test]
    fn short_curves_rejected() {
        assert!(peak_report(&curve(&[1.0, 2.0])).is_err());
        assert!(peak_report(&[]).is_err());
        assert!(peak_report(&curve(&[1.0, f64::NAN, 2.0])).is_err());
    }

    #[test]
    fn zero_eta_lower_is_base() {
        let t = contamination_envelope_curves(&curve(&[0.3, 1.7, 0.9]), &[0.0], 3.0).unwrap();
        assert!(t.rows.iter().all(|r| r.lower == r.base_variance));
    }

    #[test]
    fn arithmetic_example() {
        let t = contamination_envelope_curves(&[(1.0, 5.0)], &[0.2], 3.0).unwrap();
        assert_eq!(t.rows[0].lower, 4.0);
    }

    #[test]
    fn upper_matches_variance_chain() {
        let t = contamination_envelope_curves(&[(1.0, 4.0)], &[0.1], 3.0).unwrap();
        let base = PredictiveGaussian::new(0.0, 4.0).unwrap();
        let chain = variance_chain(&base, 0.1, &TruncationWindow::symmetric(&base, 3.0).unwrap()).unwrap();
        assert!((t.rows[0].upper - chain.upper_bound).abs() < 1e-12);
    }

    #[test]
    fn rows_sorted_and_flagged() {
        let t = contamination_envelope_curves(&curve(&[0.3, 1.7, 0.9, 0.2]), &[0.2, 0.05], 3.0).unwrap();
        assert!(t.rows.windows(2).all(|w| (w[0].psi1, w[0].eta) < (w[1].psi1, w[1].eta)));
        assert_eq!(t.rows.iter().filter(|r| r.argmax_flag).count(), 2);
        assert!(t.rows.iter().filter(|r| r.argmax_flag).all(|r| r.psi1 == 1.0));
    }

    proptest! {
        #[test]
        fn affine_maps_keep_argmax(values in prop::collection::vec(0.0f64..100.0, 3..30), a in 0.01f64..50.0, b in -10.0f64..10.0) {
            let c = curve(&values);
            let moved: Vec<(f64, f64)> = c.iter().map(|(p, v)| (*p, a * v + b)).collect();
            let i = peak_report(&c).unwrap().argmax_index;
            let j = peak_report(&moved).unwrap().argmax_index;
            // Rounding can merge two near-equal values into a tie; the argmax then
            // moves to the earlier of the two, whose original value was within rounding.
            prop_assert!(i == j || (c[i].1 - c[j].1).abs() <= 1e-12 * c[i].1.abs().max(1.0));
        }

        #[test]
        fn envelopes_share_argmax(values in prop::collection::vec(0.0f64..100.0, 1..30), eta in 0.0f64..=1.0) {
            let t = contamination_envelope_curves(&curve(&values), &[eta], 3.0).unwrap();
            let p = t.peaks[0];
            prop_assert!(p.aligned() || values.iter().filter(|v| **v == values[p.base_index]).count() > 1 || eta == 1.0);
        }
    }
}
