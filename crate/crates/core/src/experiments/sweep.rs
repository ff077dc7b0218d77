//! Monte-Carlo ψ1 sweeps: bias–variance decomposition and label misspecification.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::huber::{huber_contaminate, HuberCorruption};
use super::streams::stream;
use super::teacher::{generate_teacher_data, Teacher};
use crate::contamination::budget::check_unit;
use crate::error::{invalid, Error, Result};
use crate::rf_core::{sample_sphere, Activation, FeatureBank, FittedRF, ModelConfig};

/// Sweep grid and Monte-Carlo settings. Defaults are the desk-scale run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub psi2: f64,
    pub psi1_grid: Vec<f64>,
    pub lambda: f64,
    pub phi: f64,
    pub activation: Activation,
    pub trials: usize,
    pub test_points: usize,
    pub master_seed: u64,
    pub eta_levels: Vec<f64>,
    pub rho_levels: Vec<f64>,
    /// Half-width of the per-point truncation window, in predictive sds.
    pub truncation_k: f64,
    /// Exact minimum-norm fits: λ is forced to zero and singular systems go
    /// through the pseudoinverse.
    pub pinv: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: 32,
            psi2: 3.0,
            psi1_grid: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0],
            lambda: 1e-6,
            phi: 4.0,
            activation: Activation::Relu,
            trials: 40,
            test_points: 200,
            master_seed: 0,
            eta_levels: vec![0.05, 0.1, 0.2],
            rho_levels: vec![0.0, 0.05, 0.1, 0.2],
            truncation_k: 3.0,
            pinv: false,
        }
    }
}

impl SweepConfig {
    /// n = round(ψ2·d).
    pub fn n(&self) -> usize {
        (self.psi2 * self.d as f64).round() as usize
    }

    /// N = round(ψ1·d) for every grid point.
    pub fn feature_counts(&self) -> Vec<usize> {
        self.psi1_grid.iter().map(|p| (p * self.d as f64).round() as usize).collect()
    }

    pub fn effective_lambda(&self) -> f64 {
        if self.pinv {
            0.0
        } else {
            self.lambda
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d must be positive"));
        }
        if !(self.psi2 > 0.0) || !self.psi2.is_finite() || self.n() == 0 {
            return Err(invalid(format!("psi2={} gives no training rows at d={}", self.psi2, self.d)));
        }
        if self.psi1_grid.is_empty() {
            return Err(invalid("psi1_grid is empty"));
        }
        if self.psi1_grid.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(invalid("psi1_grid entries must be finite and positive"));
        }
        if self.psi1_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("psi1_grid must be strictly increasing"));
        }
        if let Some(p) = self.psi1_grid.iter().find(|p| (*p * self.d as f64).round() < 1.0) {
            return Err(invalid(format!("psi1={p} gives no features at d={}", self.d)));
        }
        if self.trials == 0 || self.test_points == 0 {
            return Err(invalid("trials and test_points must be positive"));
        }
        if !(self.truncation_k > 0.0) || !self.truncation_k.is_finite() {
            return Err(invalid(format!("truncation_k must be finite and positive, got {}", self.truncation_k)));
        }
        for e in &self.eta_levels {
            check_unit("eta", *e)?;
        }
        for r in &self.rho_levels {
            check_unit("rho", *r)?;
        }
        self.model_config(1).map(|_| ())
    }

    pub fn model_config(&self, n_features: usize) -> Result<ModelConfig> {
        ModelConfig::new(self.d, self.n(), n_features, self.effective_lambda(), self.phi, self.activation)
    }
}

/// How independent sweep tasks are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

fn run_tasks<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
        Execution::Serial => (0..count).map(f).collect(),
    }
}

/// One ψ1 grid point of the bias–variance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub psi1: f64,
    pub n_features: usize,
    pub mse: f64,
    pub mse_se: f64,
    pub bias2: f64,
    /// Spread of f̂ across trials, averaged over test points. Normalised by
    /// the trial count, so mse = bias2 + variance.
    pub variance: f64,
    pub failed_trials: usize,
    /// Bayesian predictive variance s²(x̃), averaged over trials and test points.
    pub predictive_variance: f64,
}

/// One (ψ1, ρ) cell of the misspecification sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisspecRow {
    pub psi1: f64,
    pub rho: f64,
    pub mse: f64,
    pub mse_se: f64,
    /// Grid point of maximal mse for this ρ.
    pub peak_flag: bool,
    pub failed_trials: usize,
}

/// Teacher and test inputs shared by every task of a sweep.
#[derive(Debug, Clone)]
pub struct SweepFixture {
    pub teacher: Teacher,
    pub test_x: DMatrix<f64>,
    /// Clean targets f*(x̃); never corrupted.
    pub test_targets: DVector<f64>,
}

impl SweepFixture {
    pub fn new(sweep: &SweepConfig, teacher: &super::TeacherConfig) -> Result<Self> {
        sweep.validate()?;
        if teacher.d != sweep.d {
            return Err(invalid(format!("teacher d={} differs from sweep d={}", teacher.d, sweep.d)));
        }
        let teacher = Teacher::new(teacher.clone(), &mut stream(sweep.master_seed, "teacher", &[]))?;
        let test_x = sample_sphere(sweep.test_points, sweep.d, &mut stream(sweep.master_seed, "test", &[]))?;
        let test_targets = teacher.eval(&test_x)?;
        Ok(Self { teacher, test_x, test_targets })
    }
}

struct TrialFit {
    preds: DVector<f64>,
    predictive_variance: f64,
}

/// Fit one replicate and predict at the test inputs. `None` marks a failed trial.
fn fit_trial(
    cfg: ModelConfig,
    bank: FeatureBank,
    data: &crate::rf_core::Dataset,
    fixture: &SweepFixture,
    with_predictive: bool,
) -> Result<Option<TrialFit>> {
    let model = match FittedRF::fit(cfg, bank, data) {
        Ok(m) => m,
        Err(Error::NumericDegeneracy(msg)) => {
            log::warn!("trial failed: {msg}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let preds = model.predict_means(&fixture.test_x)?;
    if preds.iter().any(|p| !p.is_finite()) {
        return Ok(None);
    }
    let mut predictive_variance = 0.0;
    if with_predictive {
        let z = crate::rf_core::feature_map(&fixture.test_x, model.bank(), cfg.activation)?;
        let factor = model.primal_factor();
        let total: f64 = z.row_iter().map(|r| factor.inverse_quadratic_form(&r.transpose())).sum();
        predictive_variance = (1.0 + total / z.nrows() as f64) / cfg.phi;
        if !predictive_variance.is_finite() {
            return Ok(None);
        }
    }
    Ok(Some(TrialFit { preds, predictive_variance }))
}

fn draw_trial(
    sweep: &SweepConfig,
    fixture: &SweepFixture,
    grid: usize,
    trial: usize,
    n_features: usize,
) -> Result<(crate::rf_core::Dataset, FeatureBank)> {
    let mut rng = stream(sweep.master_seed, "trial", &[grid as u64, trial as u64]);
    let data = generate_teacher_data(&fixture.teacher, sweep.n(), &mut rng)?;
    let bank = FeatureBank::sample(n_features, sweep.d, &mut rng)?;
    Ok((data, bank))
}

fn check_failures(psi1: f64, failed: usize, trials: usize) -> Result<()> {
    if failed * 10 > trials {
        return Err(Error::TooManyFailures { psi1, failed, trials });
    }
    Ok(())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

fn trial_mse(preds: &DVector<f64>, targets: &DVector<f64>) -> f64 {
    (preds - targets).norm_squared() / preds.len() as f64
}

pub fn bias_variance_sweep(sweep: &SweepConfig, teacher: &super::TeacherConfig) -> Result<Vec<SweepRow>> {
    bias_variance_sweep_with(sweep, teacher, Execution::Parallel)
}

pub fn bias_variance_sweep_with(
    sweep: &SweepConfig,
    teacher: &super::TeacherConfig,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    let fixture = SweepFixture::new(sweep, teacher)?;
    bias_variance_on(sweep, &fixture, exec)
}

pub fn bias_variance_on(sweep: &SweepConfig, fixture: &SweepFixture, exec: Execution) -> Result<Vec<SweepRow>> {
    let counts = sweep.feature_counts();
    let trials = sweep.trials;
    let outcomes = run_tasks(counts.len() * trials, exec, |task| -> Result<Option<TrialFit>> {
        let (g, t) = (task / trials, task % trials);
        let (data, bank) = draw_trial(sweep, fixture, g, t, counts[g])?;
        fit_trial(sweep.model_config(counts[g])?, bank, &data, fixture, true)
    });

    let mut outcomes = outcomes.into_iter();
    let targets = &fixture.test_targets;
    let m = targets.len() as f64;
    let mut rows = Vec::with_capacity(counts.len());
    for (g, &n_features) in counts.iter().enumerate() {
        let psi1 = sweep.psi1_grid[g];
        let fits: Vec<TrialFit> =
            outcomes.by_ref().take(trials).collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
        let failed = trials - fits.len();
        check_failures(psi1, failed, trials)?;
        let t = fits.len() as f64;

        let mses: Vec<f64> = fits.iter().map(|f| trial_mse(&f.preds, targets)).collect();
        let (mse, mse_se) = mean_and_se(&mses);
        let mean_pred = fits.iter().fold(DVector::zeros(targets.len()), |acc, f| acc + &f.preds) / t;
        let bias2 = (&mean_pred - targets).norm_squared() / m;
        let variance = fits.iter().map(|f| (&f.preds - &mean_pred).norm_squared()).sum::<f64>() / (t * m);
        let predictive_variance = fits.iter().map(|f| f.predictive_variance).sum::<f64>() / t;
        rows.push(SweepRow {
            psi1,
            n_features,
            mse,
            mse_se,
            bias2,
            variance,
            failed_trials: failed,
            predictive_variance,
        });
    }
    Ok(rows)
}

/// Test MSE against the clean targets when training labels go through Huber
/// corruption at each ρ. Data, features and corruption uniforms are shared
/// across ρ for a given (ψ1, trial), so the ρ = 0 column coincides with the
/// mse of [`bias_variance_sweep`] under the same seed.
pub fn misspecification_sweep(
    sweep: &SweepConfig,
    teacher: &super::TeacherConfig,
    corr_amplitude: f64,
) -> Result<Vec<MisspecRow>> {
    misspecification_sweep_with(sweep, teacher, corr_amplitude, Execution::Parallel)
}

pub fn misspecification_sweep_with(
    sweep: &SweepConfig,
    teacher: &super::TeacherConfig,
    corr_amplitude: f64,
    exec: Execution,
) -> Result<Vec<MisspecRow>> {
    let fixture = SweepFixture::new(sweep, teacher)?;
    misspecification_on(sweep, &fixture, corr_amplitude, exec)
}

pub fn misspecification_on(
    sweep: &SweepConfig,
    fixture: &SweepFixture,
    corr_amplitude: f64,
    exec: Execution,
) -> Result<Vec<MisspecRow>> {
    let corrs =
        sweep.rho_levels.iter().map(|r| HuberCorruption::new(*r, corr_amplitude)).collect::<Result<Vec<_>>>()?;
    let counts = sweep.feature_counts();
    let trials = sweep.trials;
    let outcomes = run_tasks(counts.len() * trials, exec, |task| -> Result<Vec<Option<f64>>> {
        let (g, t) = (task / trials, task % trials);
        let (data, bank) = draw_trial(sweep, fixture, g, t, counts[g])?;
        let cfg = sweep.model_config(counts[g])?;
        corrs
            .iter()
            .map(|corr| {
                let mut rng = stream(sweep.master_seed, "huber", &[g as u64, t as u64]);
                let (y, _) = huber_contaminate(data.y(), corr, &mut rng);
                let corrupted = data.with_responses(y)?;
                Ok(fit_trial(cfg, bank.clone(), &corrupted, fixture, false)?
                    .map(|fit| trial_mse(&fit.preds, &fixture.test_targets)))
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(counts.len() * corrs.len());
    for (g, &psi1) in sweep.psi1_grid.iter().enumerate() {
        for (r, corr) in corrs.iter().enumerate() {
            let mses: Vec<f64> = (0..trials).filter_map(|t| outcomes[g * trials + t][r]).collect();
            let failed = trials - mses.len();
            check_failures(psi1, failed, trials)?;
            let (mse, mse_se) = mean_and_se(&mses);
            rows.push(MisspecRow { psi1, rho: corr.rho, mse, mse_se, peak_flag: false, failed_trials: failed });
        }
    }
    for r in 0..corrs.len() {
        let curve: Vec<(f64, f64)> = rows.iter().skip(r).step_by(corrs.len()).map(|row| (row.psi1, row.mse)).collect();
        let peak = super::peaks::argmax_index(&curve)?;
        rows[peak * corrs.len() + r].peak_flag = true;
    }
    rows.sort_by(|a, b| a.psi1.total_cmp(&b.psi1).then(a.rho.total_cmp(&b.rho)));
    Ok(rows)
}
