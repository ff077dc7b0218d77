use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::normal::normal_quantile;
use crate::error::{invalid, Result};
use crate::rf_core::PredictiveGaussian;

/// Shape of an outer-approximated IHDR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IhdrRegion {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// The whole real line, serialised as the literal `"R"`.
    WholeLine,
}

impl IhdrRegion {
    pub fn contains(&self, y: f64) -> bool {
        match *self {
            IhdrRegion::Interval { lo, hi } => lo <= y && y <= hi,
            IhdrRegion::WholeLine => true,
        }
    }

    pub fn is_whole_line(&self) -> bool {
        matches!(self, IhdrRegion::WholeLine)
    }

    /// Text form used in CSV and JSON: `"R"` or `"[lo,hi]"`.
    pub fn to_text(&self) -> String {
        match *self {
            IhdrRegion::Interval { lo, hi } => {
                format!("[{},{}]", ryu::Buffer::new().format(lo), ryu::Buffer::new().format(hi))
            }
            IhdrRegion::WholeLine => "R".to_string(),
        }
    }
}

impl Serialize for IhdrRegion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            IhdrRegion::WholeLine => s.serialize_str("R"),
            IhdrRegion::Interval { lo, hi } => {
                let mut st = s.serialize_struct("Interval", 2)?;
                st.serialize_field("lo", &lo)?;
                st.serialize_field("hi", &hi)?;
                st.end()
            }
        }
    }
}

/// Outer approximation R^out of the (1−α) imprecise highest density region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IhdrResult {
    pub region: IhdrRegion,
    pub requested_alpha: f64,
    /// min{1, (1−α)/(1−η)}: baseline coverage needed so the lower predictive
    /// probability reaches 1−α.
    pub adjusted_level: f64,
}

/// Baseline credible level that outer-approximates the IHDR.
pub fn adjusted_level(alpha: f64, eta: f64) -> f64 {
    if eta >= 1.0 {
        return if alpha < 1.0 { 1.0 } else { 0.0 };
    }
    ((1.0 - alpha) / (1.0 - eta)).min(1.0)
}

/// Central (= highest density, since the Gaussian is symmetric and unimodal)
/// credible interval of `base` at level min{1, (1−α)/(1−η)}.
pub fn ihdr_outer(base: &PredictiveGaussian, alpha: f64, eta: f64) -> Result<IhdrResult> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    if eta == 1.0 && alpha < 1.0 {
        log::warn!("eta = 1: lower predictive density vanishes, IHDR is the whole line");
    }
    let level = adjusted_level(alpha, eta);
    let region = if level >= 1.0 {
        IhdrRegion::WholeLine
    } else {
        let z = normal_quantile(0.5 * (1.0 + level))?;
        let half = z * base.sd();
        IhdrRegion::Interval { lo: base.mean - half, hi: base.mean + half }
    };
    Ok(IhdrResult { region, requested_alpha: alpha, adjusted_level: level })
}
