//! Robust Bayesian random-feature regression.
//!
//! The baseline model is ridge-regularised random-feature regression on the
//! sphere, read as a conjugate Gaussian Bayesian model. Prior and likelihood
//! are then replaced by ε- and η-contamination neighbourhoods, and the crate
//! computes what survives: bounds on the lower/upper posterior predictive
//! densities, an outer approximation of the imprecise highest density region,
//! and a chain of predictive variance bounds. The [`experiments`] module runs
//! the double-descent sweeps that show those envelopes keep the interpolation
//! peak in place.
//!
//! Module map:
//!
//! - [`rf_core`]: sphere sampling, feature maps, ridge fitting, Gaussian predictive.
//! - [`contamination`]: credal-set set functions, envelope bounds, discrete oracle.
//! - [`robust_uq`]: IHDR outer approximation, truncated normal, variance chain.
//! - [`experiments`]: teacher data, Huber label corruption, sweeps, peak analysis.
//! - [`cli_io`]: configuration, manifests, CSV/JSON emission, CLI commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod contamination;
pub mod error;
pub mod experiments;
pub mod rf_core;
pub mod robust_uq;

pub use error::{Error, Result};
