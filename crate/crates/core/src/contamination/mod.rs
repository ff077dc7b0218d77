//! ε/η-contamination credal sets and the predictive envelope bounds they induce.
//!
//! A contamination set mixes a baseline with an arbitrary distribution,
//! (1−ε)·P + ε·Q. Its lower and upper probabilities have closed forms, and
//! Dirac-style extreme contaminants are realised as bounded uniform spikes.
//! [`predictive_envelopes`] turns a baseline Gaussian predictive into
//! pointwise bounds on the lower and upper posterior predictive densities;
//! [`discrete_envelope_oracle`] checks those directions by brute force on a grid.

pub(crate) mod budget;
mod density;
mod envelope;
mod oracle;

pub use budget::{lower_set_prob, upper_set_prob, ContaminationBudget};
pub use density::{
    envelope_density, ContaminatingDensity, EnvelopeDensity, EnvelopeKind, SpikeDensity, DEFAULT_SPIKE_HALF_WIDTH,
};
pub use envelope::{predictive_envelopes, EnvelopePair};
pub use oracle::{discrete_envelope_oracle, DiscreteModel, OracleBounds, ORACLE_MAX_CELLS};
