//! The `fit`, `predict` and `sweep` commands as library functions.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::RunConfig;
use super::manifest::RunManifest;
use super::tables::{bias_variance_csv, envelopes_csv, misspecification_csv};
use crate::contamination::{
    lower_set_prob, predictive_envelopes, upper_set_prob, ContaminatingDensity, ContaminationBudget,
};
use crate::error::{invalid, Result};
use crate::experiments::{
    bias_variance_on, contamination_envelope_curves, generate_teacher_data, misspecification_on, stream, EnvelopeTable,
    Execution, MisspecRow, SweepFixture, SweepRow, Teacher,
};
use crate::rf_core::{Dataset, FeatureBank, FittedRF, PredictiveGaussian, SolveRoute};
use crate::robust_uq::{ihdr_outer, normal_cdf, variance_chain, IhdrResult, TruncationWindow, VarianceChain};

/// Loads training data from a CSV of d input columns followed by y.
/// A first row that does not parse as numbers is taken as a header.
pub fn read_dataset(path: &Path, d: usize) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("cannot read data {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| invalid(format!("bad data row {}: {e}", i + 1)))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let parsed = match parsed {
            Ok(p) => p,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(invalid(format!("data row {}: {e}", i + 1))),
        };
        if parsed.len() != d + 1 {
            return Err(invalid(format!("data row {} has {} columns, expected d+1={}", i + 1, parsed.len(), d + 1)));
        }
        values.extend(parsed);
        rows += 1;
    }
    if rows == 0 {
        return Err(invalid(format!("no data rows in {}", path.display())));
    }
    let all = DMatrix::from_row_slice(rows, d + 1, &values);
    Dataset::new(all.columns(0, d).into_owned(), all.column(d).into_owned())
}

/// Builds the model of a run: data from `data` or the configured teacher,
/// features from the seed.
pub fn fit_model(config: &RunConfig, data: Option<&Path>) -> Result<(FittedRF, Dataset)> {
    let mut model_cfg = config.model_config()?;
    let dataset = match data {
        Some(path) => {
            let ds = read_dataset(path, model_cfg.d)?;
            model_cfg.n = ds.len();
            ds
        }
        None => {
            let teacher = Teacher::new(config.teacher_for(model_cfg.d)?, &mut stream(config.seed, "teacher", &[]))?;
            generate_teacher_data(&teacher, model_cfg.n, &mut stream(config.seed, "fit-data", &[]))?
        }
    };
    let bank = FeatureBank::sample(model_cfg.n_features, model_cfg.d, &mut stream(config.seed, "fit-features", &[]))?;
    let model = FittedRF::fit(model_cfg, bank, &dataset)?;
    Ok((model, dataset))
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub weights_norm: f64,
    pub train_mse: f64,
    pub n: usize,
    pub n_features: usize,
    /// d·ψ1·ψ2·λ.
    pub regularizer: f64,
    pub route: SolveRoute,
    pub ridgeless_pinv: bool,
    pub config: RunConfig,
    pub manifest: RunManifest,
}

pub fn cmd_fit(config: &RunConfig, data: Option<&Path>, timestamps: bool) -> Result<FitReport> {
    let manifest = RunManifest::start("fit", config, timestamps);
    let (model, dataset) = fit_model(config, data)?;
    let resid = dataset.y() - model.design() * model.weights();
    Ok(FitReport {
        weights_norm: model.weights().norm(),
        train_mse: resid.norm_squared() / dataset.len() as f64,
        n: dataset.len(),
        n_features: model.config().n_features,
        regularizer: model.config().regularizer(),
        route: model.route(),
        ridgeless_pinv: model.ridgeless_pinv(),
        config: config.clone(),
        manifest: manifest.finish(),
    })
}

/// Where the baseline predictive of `predict` comes from.
#[derive(Debug, Clone)]
pub enum PredictSource {
    /// Fit the configured model and predict at `x`, or at a seeded sphere
    /// point when `x` is `None`.
    Model { x: Option<Vec<f64>>, data: Option<PathBuf> },
    /// Use N(mean, variance) directly.
    Gaussian { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct PredictOptions {
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub k: f64,
    pub probe_points: usize,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self { eta: 0.05, epsilon: 0.05, alpha: 0.1, k: 3.0, probe_points: 41 }
    }
}

impl PredictOptions {
    pub fn validate(&self) -> Result<()> {
        ContaminationBudget::new(self.epsilon, self.eta)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(2.0..=40.0).contains(&self.k) {
            return Err(invalid(format!("k must lie in [2, 40], got {}", self.k)));
        }
        if !(2..=100_000).contains(&self.probe_points) {
            return Err(invalid(format!("probe_points must lie in [2, 100000], got {}", self.probe_points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow {
    pub y: f64,
    pub base_density: f64,
    /// (1−η)·p(y).
    pub lower_bound: f64,
    /// (1−η)·p(y) + η·u(y), u uniform on the truncation window.
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IhdrProbability {
    /// Baseline predictive mass of the region.
    pub base: f64,
    /// (1−η)·base, the lower predictive probability; at least 1−α.
    pub lower_predictive: f64,
    /// ε-contamination lower and upper probabilities of the region.
    pub epsilon_lower: f64,
    pub epsilon_upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictReport {
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    pub mean: f64,
    pub variance: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub k: f64,
    pub window: TruncationWindow,
    pub probe: Vec<ProbeRow>,
    pub ihdr: IhdrResult,
    pub ihdr_probability: IhdrProbability,
    pub variance_chain: VarianceChain,
    pub manifest: RunManifest,
}

pub fn cmd_predict(
    config: &RunConfig,
    source: &PredictSource,
    opts: &PredictOptions,
    timestamps: bool,
) -> Result<PredictReport> {
    opts.validate()?;
    let manifest = RunManifest::start("predict", config, timestamps);
    let (base, x, label) = match source {
        PredictSource::Gaussian { mean, variance } => (PredictiveGaussian::new(*mean, *variance)?, None, "gaussian"),
        PredictSource::Model { x, data } => {
            let (model, _) = fit_model(config, data.as_deref())?;
            let d = model.config().d;
            let point = match x {
                Some(v) if v.len() != d => {
                    return Err(invalid(format!("--x has {} coordinates, expected d={d}", v.len())))
                }
                Some(v) => DVector::from_column_slice(v),
                None => {
                    crate::rf_core::sample_sphere(1, d, &mut stream(config.seed, "predict", &[]))?.row(0).transpose()
                }
            };
            let g = model.posterior_predictive(&point)?;
            (g, Some(point.iter().copied().collect()), "model")
        }
    };

    let window = TruncationWindow::symmetric(&base, opts.k)?;
    let budget = ContaminationBudget::new(opts.epsilon, opts.eta)?;
    let pair = predictive_envelopes(base, budget, ContaminatingDensity::uniform(window.a, window.b)?);
    let reach = (opts.k + 1.0) * base.sd();
    let probe = (0..opts.probe_points)
        .map(|i| {
            let y = base.mean - reach + 2.0 * reach * i as f64 / (opts.probe_points - 1) as f64;
            ProbeRow {
                y,
                base_density: base.pdf(y),
                lower_bound: pair.lower_bound_at(y),
                upper_bound: pair.upper_bound_at(y),
            }
        })
        .collect();

    let ihdr = ihdr_outer(&base, opts.alpha, opts.eta)?;
    let (mass, whole) = match ihdr.region {
        crate::robust_uq::IhdrRegion::WholeLine => (1.0, true),
        crate::robust_uq::IhdrRegion::Interval { lo, hi } => {
            (normal_cdf((hi - base.mean) / base.sd()) - normal_cdf((lo - base.mean) / base.sd()), false)
        }
    };
    let ihdr_probability = IhdrProbability {
        base: mass,
        lower_predictive: (1.0 - opts.eta) * mass,
        epsilon_lower: lower_set_prob(mass, opts.epsilon, whole)?,
        epsilon_upper: upper_set_prob(mass, opts.epsilon, false)?,
    };

    Ok(PredictReport {
        source: label,
        x,
        mean: base.mean,
        variance: base.variance,
        eta: opts.eta,
        epsilon: opts.epsilon,
        alpha: opts.alpha,
        k: opts.k,
        window,
        probe,
        ihdr,
        ihdr_probability,
        variance_chain: variance_chain(&base, opts.eta, &window)?,
        manifest: manifest.finish(),
    })
}

/// All tables of one sweep run.
#[derive(Debug, Clone)]
pub struct SweepOutputs {
    pub bias_variance: Vec<SweepRow>,
    /// Envelopes around the Monte-Carlo estimator variance.
    pub envelopes: EnvelopeTable,
    /// Envelopes around the mean Bayesian predictive variance s².
    pub envelopes_predictive: EnvelopeTable,
    pub misspecification: Vec<MisspecRow>,
    pub manifest: RunManifest,
}

pub fn run_sweep(config: &RunConfig, exec: Execution, timestamps: bool) -> Result<SweepOutputs> {
    let manifest = RunManifest::start("sweep", config, timestamps);
    let sweep = &config.sweep;
    let teacher = config.teacher_for(sweep.d)?;
    let fixture = SweepFixture::new(sweep, &teacher)?;
    let bias_variance = bias_variance_on(sweep, &fixture, exec)?;
    let curve: Vec<(f64, f64)> = bias_variance.iter().map(|r| (r.psi1, r.variance)).collect();
    let envelopes = contamination_envelope_curves(&curve, &sweep.eta_levels, sweep.truncation_k)?;
    let curve: Vec<(f64, f64)> = bias_variance.iter().map(|r| (r.psi1, r.predictive_variance)).collect();
    let envelopes_predictive = contamination_envelope_curves(&curve, &sweep.eta_levels, sweep.truncation_k)?;
    let misspecification = misspecification_on(sweep, &fixture, config.amplitude_for(&teacher), exec)?;
    Ok(SweepOutputs { bias_variance, envelopes, envelopes_predictive, misspecification, manifest: manifest.finish() })
}

pub const SWEEP_FILES: [&str; 5] =
    ["bias_variance.csv", "envelopes.csv", "envelopes_predictive.csv", "misspecification.csv", "manifest.json"];

/// Writes the sweep tables and manifest into `dir`, creating it if needed.
pub fn write_sweep(out: &SweepOutputs, dir: &Path) -> Result<Vec<PathBuf>> {
    let contents = [
        bias_variance_csv(&out.bias_variance)?,
        envelopes_csv(&out.envelopes)?,
        envelopes_csv(&out.envelopes_predictive)?,
        misspecification_csv(&out.misspecification)?,
        serde_json::to_string_pretty(&out.manifest)? + "\n",
    ];
    std::fs::create_dir_all(dir).map_err(|e| with_path(e, dir))?;
    let mut written = Vec::new();
    for (name, text) in SWEEP_FILES.iter().zip(contents) {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| with_path(e, &path))?;
        written.push(path);
    }
    Ok(written)
}

pub(crate) fn with_path(e: std::io::Error, path: &Path) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}
