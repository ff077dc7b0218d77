//! Robust predictive uncertainty: IHDR outer approximation, truncated normal
//! moments and the lower/upper predictive variance bound chain.

mod ihdr;
mod normal;
mod variance;

pub use ihdr::{adjusted_level, ihdr_outer, IhdrRegion, IhdrResult};
pub use normal::{normal_cdf, normal_quantile, normal_sf, std_normal_pdf};
pub use variance::{
    lower_variance_bound, truncated_normal_variance, upper_variance_bound, variance_chain, TruncationWindow,
    VarianceChain, DEFAULT_TRUNCATION_K,
};
