//! Brute-force validation harness on a discretised response line.
//!
//! The parameter a is a location on the same grid as the response: under the
//! baseline, ỹ falls in cell a. The baseline prior over cells is contaminated
//! by a spike on one cell (ε), and both the likelihood of the observed datum
//! and the predictive kernel are contaminated by spikes (η). Every
//! combination of spike cells is enumerated and updated by Bayes' rule; the
//! extremes of the resulting predictive masses are the envelope. Because the
//! predictive mass is linear-fractional in each contaminant, these point-mass
//! choices attain the extremes over the whole contamination set.
//!
//! Alongside the enumeration, the pessimistic generalised-Bayes lower
//! posterior is evaluated with the Choquet integral of the upper likelihood
//! against the upper prior, giving the discrete analogue of the lower
//! predictive bound.

use serde::Serialize;

use super::budget::check_unit;
use crate::error::{invalid, Error, Result};

/// Largest grid the oracle accepts.
pub const ORACLE_MAX_CELLS: usize = 200;

/// Result of an oracle run on one query set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleBounds {
    /// Minimum predictive mass of the query set over all enumerated members.
    pub lower_mass: f64,
    /// Maximum predictive mass of the query set over all enumerated members.
    pub upper_mass: f64,
    /// Predictive mass under the uncontaminated model.
    pub base_mass: f64,
    /// Mass of the query set under the pessimistic generalised-Bayes lower
    /// predictive (sub-normalised, never above `lower_mass`).
    pub pessimistic_lower: f64,
    /// Number of (prior, likelihood, predictive) spike combinations visited.
    pub members: usize,
}

/// Discrete Bayesian model for the oracle.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    widths: Vec<f64>,
    prior: Vec<f64>,
    likelihood: Vec<f64>,
    observed_cell: usize,
}

impl DiscreteModel {
    /// `grid` holds m+1 increasing cell boundaries, `prior` m masses summing to
    /// one, `likelihood` the baseline density of the observed datum under each
    /// parameter cell, `observed_cell` the cell holding that datum.
    pub fn new(grid: &[f64], prior: &[f64], likelihood: &[f64], observed_cell: usize) -> Result<Self> {
        let m = prior.len();
        if m == 0 {
            return Err(invalid("oracle needs at least one cell"));
        }
        if m > ORACLE_MAX_CELLS {
            return Err(Error::GridTooLarge { cells: m, limit: ORACLE_MAX_CELLS });
        }
        if grid.len() != m + 1 {
            return Err(invalid(format!("{} boundaries for {m} cells", grid.len())));
        }
        if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("cell boundaries must be finite and strictly increasing"));
        }
        if prior.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("cell masses must be non-negative"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("cell masses sum to {total}, expected 1")));
        }
        if likelihood.len() != m || likelihood.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(invalid("likelihood needs one finite non-negative value per cell"));
        }
        if observed_cell >= m {
            return Err(invalid(format!("observed cell {observed_cell} outside 0..{m}")));
        }
        Ok(Self {
            widths: grid.windows(2).map(|w| w[1] - w[0]).collect(),
            prior: prior.to_vec(),
            likelihood: likelihood.to_vec(),
            observed_cell,
        })
    }

    pub fn cells(&self) -> usize {
        self.prior.len()
    }

    /// Baseline posterior over parameter cells, which is also the baseline
    /// predictive over response cells.
    pub fn base_posterior(&self) -> Vec<f64> {
        normalize(self.prior.iter().zip(&self.likelihood).map(|(p, l)| p * l).collect())
            .expect("baseline evidence must be positive")
    }

    fn query_mask(&self, query: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.cells()];
        for &q in query {
            if q >= self.cells() {
                return Err(invalid(format!("query cell {q} outside 0..{}", self.cells())));
            }
            mask[q] = true;
        }
        Ok(mask)
    }

    /// Density at the observed datum of a spike filling cell `k`.
    fn spike_at_observation(&self, k: usize) -> f64 {
        if k == self.observed_cell {
            1.0 / self.widths[k]
        } else {
            0.0
        }
    }

    pub fn bounds(&self, epsilon: f64, eta: f64, query: &[usize]) -> Result<OracleBounds> {
        check_unit("epsilon", epsilon)?;
        check_unit("eta", eta)?;
        let mask = self.query_mask(query)?;
        let m = self.cells();
        let mass = |dist: &[f64]| -> f64 { dist.iter().zip(&mask).filter(|(_, q)| **q).map(|(p, _)| p).sum() };

        let base_mass = mass(&self.base_posterior());
        let (mut lower, mut upper, mut members) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
        let mut joint = vec![0.0; m];
        for i in 0..m {
            for k in 0..m {
                let s = self.spike_at_observation(k);
                for (a, slot) in joint.iter_mut().enumerate() {
                    let prior = (1.0 - epsilon) * self.prior[a] + if a == i { epsilon } else { 0.0 };
                    *slot = prior * ((1.0 - eta) * self.likelihood[a] + eta * s);
                }
                let Some(post) = normalize(joint.clone()) else { continue };
                let post_q = mass(&post);
                for spike_cell in mask.iter() {
                    let pred = (1.0 - eta) * post_q + if *spike_cell { eta } else { 0.0 };
                    lower = lower.min(pred);
                    upper = upper.max(pred);
                    members += 1;
                }
            }
        }

        let pessimistic = self.pessimistic_lower_posterior(epsilon, eta);
        let pessimistic_lower = (1.0 - eta) * mass(&pessimistic);
        Ok(OracleBounds { lower_mass: lower, upper_mass: upper, base_mass, pessimistic_lower, members })
    }

    /// Upper likelihood ℓ̄_a = (1−η)·ℓ_a + η·spike at the observed datum.
    fn upper_likelihood(&self, eta: f64) -> Vec<f64> {
        let s = self.spike_at_observation(self.observed_cell);
        self.likelihood.iter().map(|l| (1.0 - eta) * l + eta * s).collect()
    }

    /// Pessimistic generalised-Bayes lower posterior:
    /// (1−ε)·p_a·(1−η)·ℓ_a divided by the Choquet integral of ℓ̄ against the upper prior.
    pub fn pessimistic_lower_posterior(&self, epsilon: f64, eta: f64) -> Vec<f64> {
        let upper_lik = self.upper_likelihood(eta);
        let evidence = choquet_upper(&upper_lik, &self.prior, epsilon);
        self.prior.iter().zip(&self.likelihood).map(|(p, l)| (1.0 - epsilon) * p * (1.0 - eta) * l / evidence).collect()
    }

    /// Upper expectation of `values` over the ε-contaminated prior,
    /// by enumerating the point-mass contaminants.
    pub fn upper_expectation(&self, values: &[f64], epsilon: f64) -> f64 {
        let base: f64 = values.iter().zip(&self.prior).map(|(v, p)| v * p).sum();
        (0..self.cells()).map(|i| (1.0 - epsilon) * base + epsilon * values[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn choquet_upper(&self, values: &[f64], epsilon: f64) -> f64 {
        choquet_upper(values, &self.prior, epsilon)
    }
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= total);
    Some(v)
}

/// Choquet integral of non-negative `values` with respect to the upper
/// probability A ↦ (1−ε)·P(A) + ε (A non-empty), via level sets:
/// Σ_j (v_(j) − v_(j−1))·P̄({v ≥ v_(j)}).
fn choquet_upper(values: &[f64], prior: &[f64], epsilon: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut tail: f64 = prior.iter().sum();
    let mut prev = 0.0;
    let mut total = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let level = values[order[idx]];
        if level > prev {
            total += (level - prev) * ((1.0 - epsilon) * tail + epsilon);
            prev = level;
        }
        // Drop every cell sitting exactly at this level before moving up.
        while idx < order.len() && values[order[idx]] == level {
            tail -= prior[order[idx]];
            idx += 1;
        }
    }
    total
}

/// Oracle on a discretised predictive with a flat likelihood, so the
/// baseline predictive is `base_cell_masses` itself.
pub fn discrete_envelope_oracle(
    grid: &[f64],
    base_cell_masses: &[f64],
    epsilon: f64,
    eta: f64,
    query_cells: &[usize],
) -> Result<OracleBounds> {
    if base_cell_masses.len() > ORACLE_MAX_CELLS {
        return Err(Error::GridTooLarge { cells: base_cell_masses.len(), limit: ORACLE_MAX_CELLS });
    }
    let flat = vec![1.0; base_cell_masses.len()];
    DiscreteModel::new(grid, base_cell_masses, &flat, 0)?.bounds(epsilon, eta, query_cells)
}
