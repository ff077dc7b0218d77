//! Synthetic teacher models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rf_core::{feature_map, sample_sphere, Activation, Dataset, FeatureBank};

/// Functional form of f*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TeacherKind {
    /// f*(x) = β0 + ⟨x, β⟩.
    Linear { beta0: f64, beta: Vec<f64> },
    /// f*(x) = Σ_j w_j σ(⟨x, θ_j⟩/√d) with w_j ~ N(0, 1/features), drawn once.
    /// `features: None` means 2d.
    RfTeacher {
        #[serde(default)]
        features: Option<usize>,
        #[serde(default = "default_teacher_activation")]
        activation: Activation,
    },
}

fn default_teacher_activation() -> Activation {
    Activation::Tanh
}

fn default_noise_sd() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    pub d: usize,
    #[serde(flatten)]
    pub kind: TeacherKind,
    /// Standard deviation of the Gaussian label noise; zero is allowed.
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

impl TeacherConfig {
    /// Random-feature teacher with 2d tanh features and noise_sd = 0.5.
    pub fn rf_default(d: usize) -> Self {
        Self { d, kind: TeacherKind::RfTeacher { features: None, activation: Activation::Tanh }, noise_sd: 0.5 }
    }

    pub fn linear(beta0: f64, beta: Vec<f64>, noise_sd: f64) -> Self {
        Self { d: beta.len(), kind: TeacherKind::Linear { beta0, beta }, noise_sd }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("teacher dimension must be positive"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(invalid(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd)));
        }
        match &self.kind {
            TeacherKind::Linear { beta0, beta } => {
                if beta.len() != self.d {
                    return Err(invalid(format!("beta has length {}, expected d={}", beta.len(), self.d)));
                }
                if !beta0.is_finite() || beta.iter().any(|b| !b.is_finite()) {
                    return Err(invalid("linear teacher coefficients must be finite"));
                }
            }
            TeacherKind::RfTeacher { features, .. } => {
                if *features == Some(0) {
                    return Err(invalid("teacher feature count must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Frozen {
    Linear { beta0: f64, beta: DVector<f64> },
    Rf { bank: FeatureBank, weights: DVector<f64>, activation: Activation },
}

/// A teacher with all random parts drawn and fixed.
#[derive(Debug, Clone)]
pub struct Teacher {
    config: TeacherConfig,
    frozen: Frozen,
}

impl Teacher {
    pub fn new<R: Rng + ?Sized>(config: TeacherConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let frozen = match &config.kind {
            TeacherKind::Linear { beta0, beta } => {
                Frozen::Linear { beta0: *beta0, beta: DVector::from_column_slice(beta) }
            }
            TeacherKind::RfTeacher { features, activation } => {
                let count = features.unwrap_or(2 * config.d);
                let bank = FeatureBank::sample(count, config.d, rng)?;
                let w = Normal::new(0.0, (1.0 / count as f64).sqrt()).expect("positive sd");
                let weights = DVector::from_fn(count, |_, _| w.sample(rng));
                Frozen::Rf { bank, weights, activation: *activation }
            }
        };
        Ok(Self { config, frozen })
    }

    pub fn config(&self) -> &TeacherConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.d
    }

    pub fn noise_sd(&self) -> f64 {
        self.config.noise_sd
    }

    /// f* at every row of `x`.
    pub fn eval(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.config.d {
            return Err(invalid(format!("teacher expects d={}, got {} columns", self.config.d, x.ncols())));
        }
        Ok(match &self.frozen {
            Frozen::Linear { beta0, beta } => (x * beta).add_scalar(*beta0),
            Frozen::Rf { bank, weights, activation } => feature_map(x, bank, *activation)? * weights,
        })
    }
}

/// n sphere inputs with labels f*(x) + N(0, noise_sd²).
pub fn generate_teacher_data<R: Rng + ?Sized>(teacher: &Teacher, n: usize, rng: &mut R) -> Result<Dataset> {
    let x = sample_sphere(n, teacher.dim(), rng)?;
    let mut y = teacher.eval(&x)?;
    let sd = teacher.noise_sd();
    if sd > 0.0 {
        let noise = Normal::new(0.0, sd).expect("positive sd");
        y.iter_mut().for_each(|v| *v += noise.sample(rng));
    }
    Dataset::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_teacher() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Teacher::new(TeacherConfig::linear(2.5, vec![0.0; 4], 0.0), &mut rng).unwrap();
        let data = generate_teacher_data(&t, 50, &mut rng).unwrap();
        assert!(data.y().iter().all(|y| *y == 2.5));
    }

    #[test]
    fn noiseless_linear_teacher_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let beta = vec![0.5, -1.0, 2.0];
        let t = Teacher::new(TeacherConfig::linear(0.3, beta.clone(), 0.0), &mut rng).unwrap();
        let data = generate_teacher_data(&t, 20, &mut rng).unwrap();
        for i in 0..20 {
            let row = data.x().row(i);
            let want = 0.3 + row[0] * beta[0] + row[1] * beta[1] + row[2] * beta[2];
            assert!((data.y()[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_variance_matches_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Teacher::new(TeacherConfig::rf_default(8), &mut rng).unwrap();
        let data = generate_teacher_data(&t, 10_000, &mut rng).unwrap();
        let resid = data.y() - t.eval(data.x()).unwrap();
        let mean = resid.mean();
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((0.23..=0.27).contains(&var), "{var}");
    }

    #[test]
    fn rf_teacher_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = Teacher::new(TeacherConfig::rf_default(6), &mut rng).unwrap();
        let x = sample_sphere(5, 6, &mut rng).unwrap();
        assert_eq!(t.eval(&x).unwrap(), t.eval(&x).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cfg = TeacherConfig::linear(0.0, vec![1.0, 2.0], 0.1);
        cfg.d = 3;
        assert!(Teacher::new(cfg, &mut rng).is_err());
        assert!(Teacher::new(TeacherConfig::linear(0.0, vec![1.0], -0.1), &mut rng).is_err());
        let mut rf = TeacherConfig::rf_default(4);
        rf.kind = TeacherKind::RfTeacher { features: Some(0), activation: Activation::Tanh };
        assert!(Teacher::new(rf, &mut rng).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = TeacherConfig::rf_default(4);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<TeacherConfig>(&text).unwrap(), cfg);
        let lin: TeacherConfig =
            serde_json::from_str(r#"{"d":2,"kind":"linear","beta0":1.0,"beta":[0.0,1.0]}"#).unwrap();
        assert_eq!(lin.noise_sd, 0.5);
    }
}
