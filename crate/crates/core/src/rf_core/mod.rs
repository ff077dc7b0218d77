//! Random-feature regression on the sphere and its Gaussian posterior predictive.

mod config;
mod features;
mod predictive;
mod ridge;
mod sphere;

pub use config::{Activation, ModelConfig};
pub use features::{feature_map, feature_vector};
pub use predictive::{gaussian_pdf, PredictiveGaussian};
pub use ridge::{ridge_fit, FittedRF, GramFactor, RidgeSolution, SolveRoute};
pub use sphere::{sample_sphere, Dataset, FeatureBank, SPHERE_TOL};
