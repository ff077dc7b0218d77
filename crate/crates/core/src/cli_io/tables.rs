//! CSV encoding of sweep tables: LF line endings, header row, shortest
//! round-trip floats, and no NaN or infinity literals.

use crate::error::{Error, Result};
use crate::experiments::{EnvelopeTable, MisspecRow, SweepRow};

pub const BIAS_VARIANCE_HEADER: &str = "psi1,N,mse,mse_se,bias2,variance,failed_trials";
pub const ENVELOPES_HEADER: &str = "psi1,eta,base_variance,lower_envelope,upper_envelope,argmax_flag";
pub const MISSPECIFICATION_HEADER: &str = "psi1,rho,mse,mse_se,peak_flag";

/// Shortest decimal that parses back to the same f64.
pub fn format_float(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::NumericDegeneracy(format!("refusing to write non-finite value {x}")));
    }
    Ok(ryu::Buffer::new().format_finite(x).to_string())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn table(header: &str, rows: impl IntoIterator<Item = Result<String>>) -> Result<String> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row?);
        out.push('\n');
    }
    Ok(out)
}

pub fn bias_variance_csv(rows: &[SweepRow]) -> Result<String> {
    table(
        BIAS_VARIANCE_HEADER,
        rows.iter().map(|r| {
            Ok(format!(
                "{},{},{},{},{},{},{}",
                format_float(r.psi1)?,
                r.n_features,
                format_float(r.mse)?,
                format_float(r.mse_se)?,
                format_float(r.bias2)?,
                format_float(r.variance)?,
                r.failed_trials
            ))
        }),
    )
}

pub fn envelopes_csv(t: &EnvelopeTable) -> Result<String> {
    table(
        ENVELOPES_HEADER,
        t.rows.iter().map(|r| {
            Ok(format!(
                "{},{},{},{},{},{}",
                format_float(r.psi1)?,
                format_float(r.eta)?,
                format_float(r.base_variance)?,
                format_float(r.lower)?,
                format_float(r.upper)?,
                flag(r.argmax_flag)
            ))
        }),
    )
}

pub fn misspecification_csv(rows: &[MisspecRow]) -> Result<String> {
    table(
        MISSPECIFICATION_HEADER,
        rows.iter().map(|r| {
            Ok(format!(
                "{},{},{},{},{}",
                format_float(r.psi1)?,
                format_float(r.rho)?,
                format_float(r.mse)?,
                format_float(r.mse_se)?,
                flag(r.peak_flag)
            ))
        }),
    )
}
