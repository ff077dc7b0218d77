use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

/// Relative tolerance on row norms for points on S^{d-1}(√d).
pub const SPHERE_TOL: f64 = 1e-10;

/// Draws `count` points uniformly on the sphere of radius √d in R^d.
///
/// Each row is a standard normal vector rescaled to norm √d.
pub fn sample_sphere<R: Rng + ?Sized>(count: usize, d: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if count == 0 || d == 0 {
        return Err(invalid(format!("sample_sphere needs count, d >= 1 (got {count}, {d})")));
    }
    let radius = (d as f64).sqrt();
    let mut out = DMatrix::zeros(count, d);
    let mut row = vec![0.0; d];
    for i in 0..count {
        let norm = loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = v / norm * radius;
        }
    }
    Ok(out)
}

pub(crate) fn check_sphere_rows(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let radius = (m.ncols() as f64).sqrt();
    for (i, row) in m.row_iter().enumerate() {
        let norm = row.norm();
        if !norm.is_finite() || ((norm - radius) / radius).abs() > SPHERE_TOL {
            return Err(invalid(format!(
                "{what} row {i} has norm {norm}, expected {radius} (sphere of radius sqrt(d))"
            )));
        }
    }
    Ok(())
}

/// Inputs on S^{d-1}(√d) and their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(invalid(format!("X has {} rows but y has {} entries", x.nrows(), y.len())));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(invalid("dataset must be non-empty"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("responses must be finite"));
        }
        check_sphere_rows(&x, "input")?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Same inputs, new responses.
    pub fn with_responses(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.x, self.y)
    }
}

/// Feature directions θ_1..θ_N, one per row, each on S^{d-1}(√d).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBank {
    theta: DMatrix<f64>,
}

impl FeatureBank {
    pub fn new(theta: DMatrix<f64>) -> Result<Self> {
        if theta.nrows() == 0 || theta.ncols() == 0 {
            return Err(invalid("feature bank must be non-empty"));
        }
        check_sphere_rows(&theta, "feature")?;
        Ok(Self { theta })
    }

    pub fn sample<R: Rng + ?Sized>(n_features: usize, d: usize, rng: &mut R) -> Result<Self> {
        Ok(Self { theta: sample_sphere(n_features, d, rng)? })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.theta.ncols()
    }
}
