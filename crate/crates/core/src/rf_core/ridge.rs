use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{feature_map, feature_vector, Dataset, FeatureBank, ModelConfig, PredictiveGaussian, SPHERE_TOL};
use crate::error::{invalid, Result};

/// Smallest admissible ratio of Cholesky pivots before falling back to an
/// eigendecomposition.
const PIVOT_RATIO: f64 = 1e-12;

/// Which linear system is solved for the ridge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveRoute {
    /// Dual when N > n, primal otherwise.
    Auto,
    /// (ZᵀZ + λ'I) a = Zᵀy, an N×N system.
    Primal,
    /// a = Zᵀ(ZZᵀ + λ'I)⁻¹y, an n×n system.
    Dual,
}

/// Factorisation of a symmetric positive semidefinite matrix.
///
/// Cholesky when the pivots are well separated from zero, otherwise an
/// eigendecomposition whose eigenvalues below `dim·ε·max` are dropped
/// (Moore-Penrose pseudoinverse).
#[derive(Debug, Clone)]
pub enum GramFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Eigen { vectors: DMatrix<f64>, inv_values: DVector<f64>, truncated: usize },
}

impl GramFactor {
    pub fn new(gram: DMatrix<f64>) -> Self {
        if let Some(chol) = Cholesky::new(gram.clone()) {
            let l = chol.l_dirty();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..l.nrows() {
                let p = l[(i, i)] * l[(i, i)];
                lo = lo.min(p);
                hi = hi.max(p);
            }
            if hi > 0.0 && lo >= PIVOT_RATIO * hi {
                return GramFactor::Cholesky(chol);
            }
        }
        let dim = gram.nrows();
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cutoff = top * dim as f64 * f64::EPSILON;
        let mut truncated = 0;
        let inv_values = eig.eigenvalues.map(|v| {
            if v > cutoff {
                1.0 / v
            } else {
                truncated += 1;
                0.0
            }
        });
        GramFactor::Eigen { vectors: eig.eigenvectors, inv_values, truncated }
    }

    /// G⁻¹ b (or G⁺ b on the eigen path).
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            GramFactor::Cholesky(chol) => chol.solve(rhs),
            GramFactor::Eigen { vectors, inv_values, .. } => {
                let coeffs = vectors.tr_mul(rhs).component_mul(inv_values);
                vectors * coeffs
            }
        }
    }

    /// vᵀ G⁻¹ v, computed so that the result is never negative.
    pub fn inverse_quadratic_form(&self, v: &DVector<f64>) -> f64 {
        match self {
            GramFactor::Cholesky(chol) => {
                let mut w = v.clone();
                chol.l_dirty().solve_lower_triangular_mut(&mut w);
                w.norm_squared()
            }
            GramFactor::Eigen { vectors, inv_values, .. } => {
                let c = vectors.tr_mul(v);
                c.iter().zip(inv_values.iter()).map(|(c, s)| c * c * s).sum()
            }
        }
    }

    /// True when eigenvalues were dropped, i.e. this is a pseudoinverse.
    pub fn is_pseudo_inverse(&self) -> bool {
        matches!(self, GramFactor::Eigen { truncated, .. } if *truncated > 0)
    }
}

/// Output of [`ridge_fit`].
#[derive(Debug, Clone)]
pub struct RidgeSolution {
    pub weights: DVector<f64>,
    /// Route actually taken (never `Auto`).
    pub route: SolveRoute,
    /// The system was singular and a minimum-norm pseudoinverse solution was returned.
    pub ridgeless_pinv: bool,
}

fn check_design(z: &DMatrix<f64>, y: &DVector<f64>, config: &ModelConfig) -> Result<()> {
    config.validate()?;
    if z.nrows() != y.len() {
        return Err(invalid(format!("Z has {} rows but y has {} entries", z.nrows(), y.len())));
    }
    if z.nrows() != config.n || z.ncols() != config.n_features {
        return Err(invalid(format!(
            "Z is {}x{} but config expects n={} by N={}",
            z.nrows(),
            z.ncols(),
            config.n,
            config.n_features
        )));
    }
    if z.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(invalid("design matrix and responses must be finite"));
    }
    Ok(())
}

fn regularized(mut gram: DMatrix<f64>, lam: f64) -> DMatrix<f64> {
    for i in 0..gram.nrows() {
        gram[(i, i)] += lam;
    }
    gram
}

/// Solves min_a ‖y − Za‖² + d·ψ1·ψ2·λ·‖a‖².
pub fn ridge_fit(z: &DMatrix<f64>, y: &DVector<f64>, config: &ModelConfig, route: SolveRoute) -> Result<RidgeSolution> {
    check_design(z, y, config)?;
    let lam = config.regularizer();
    let route = match route {
        SolveRoute::Auto if z.ncols() > z.nrows() => SolveRoute::Dual,
        SolveRoute::Auto => SolveRoute::Primal,
        r => r,
    };
    let (weights, pinv) = match route {
        SolveRoute::Primal => {
            let factor = GramFactor::new(regularized(z.tr_mul(z), lam));
            (factor.solve(&z.tr_mul(y)), factor.is_pseudo_inverse())
        }
        SolveRoute::Dual => {
            let factor = GramFactor::new(regularized(z * z.transpose(), lam));
            (z.tr_mul(&factor.solve(y)), factor.is_pseudo_inverse())
        }
        SolveRoute::Auto => unreachable!(),
    };
    Ok(RidgeSolution { weights, route, ridgeless_pinv: pinv })
}

/// A trained random-feature model. Immutable once built.
#[derive(Debug, Clone)]
pub struct FittedRF {
    config: ModelConfig,
    bank: FeatureBank,
    design: DMatrix<f64>,
    solution: RidgeSolution,
    primal: OnceLock<GramFactor>,
}

impl FittedRF {
    pub fn fit(config: ModelConfig, bank: FeatureBank, data: &Dataset) -> Result<Self> {
        Self::fit_with(config, bank, data, SolveRoute::Auto)
    }

    pub fn fit_with(config: ModelConfig, bank: FeatureBank, data: &Dataset, route: SolveRoute) -> Result<Self> {
        if bank.dim() != config.d || data.dim() != config.d {
            return Err(invalid(format!(
                "dimension mismatch: config d={}, features d={}, data d={}",
                config.d,
                bank.dim(),
                data.dim()
            )));
        }
        let design = feature_map(data.x(), &bank, config.activation)?;
        let solution = ridge_fit(&design, data.y(), &config, route)?;
        Ok(Self { config, bank, design, solution, primal: OnceLock::new() })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn bank(&self) -> &FeatureBank {
        &self.bank
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.solution.weights
    }

    pub fn route(&self) -> SolveRoute {
        self.solution.route
    }

    /// Whether any solve (weights or predictive covariance) fell back to a pseudoinverse.
    pub fn ridgeless_pinv(&self) -> bool {
        self.solution.ridgeless_pinv || self.primal_factor().is_pseudo_inverse()
    }

    /// Factor of ZᵀZ + d·ψ1·ψ2·λ·I, built on first use.
    pub fn primal_factor(&self) -> &GramFactor {
        self.primal
            .get_or_init(|| GramFactor::new(regularized(self.design.tr_mul(&self.design), self.config.regularizer())))
    }

    /// Ridge predictor f̂(x) = z̃ᵀâ.
    pub fn predict_mean(&self, x: &DVector<f64>) -> Result<f64> {
        let z = feature_vector(x, &self.bank, self.config.activation)?;
        Ok(z.dot(&self.solution.weights))
    }

    /// f̂ at every row of `x`.
    pub fn predict_means(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let z = feature_map(x, &self.bank, self.config.activation)?;
        Ok(z * &self.solution.weights)
    }

    /// Baseline Gaussian posterior predictive N(f̂(x̃), s²(x̃)) with
    /// s²(x̃) = φ⁻¹·(1 + z̃ᵀ(ZᵀZ + d·ψ1·ψ2·λ·I)⁻¹z̃).
    pub fn posterior_predictive(&self, x: &DVector<f64>) -> Result<PredictiveGaussian> {
        let radius = (self.config.d as f64).sqrt();
        let norm = x.norm();
        if ((norm - radius) / radius).abs() > SPHERE_TOL {
            log::warn!("test input has norm {norm}, off the sphere of radius {radius}");
        }
        let z = feature_vector(x, &self.bank, self.config.activation)?;
        let factor = self.primal_factor();
        if factor.is_pseudo_inverse() {
            log::warn!("predictive covariance uses a pseudoinverse (singular Gram matrix)");
        }
        let mean = z.dot(&self.solution.weights);
        let variance = (1.0 + factor.inverse_quadratic_form(&z)) / self.config.phi;
        PredictiveGaussian::new(mean, variance)
    }

    /// Training objective ‖y − Za‖² + d·ψ1·ψ2·λ·‖a‖².
    pub fn objective(&self, y: &DVector<f64>, a: &DVector<f64>) -> f64 {
        (y - &self.design * a).norm_squared() + self.config.regularizer() * a.norm_squared()
    }

    /// Gradient of [`Self::objective`]: 2Zᵀ(Za − y) + 2·d·ψ1·ψ2·λ·a.
    pub fn objective_gradient(&self, y: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        let resid = &self.design * a - y;
        self.design.tr_mul(&resid) * 2.0 + a * (2.0 * self.config.regularizer())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf_core::{sample_sphere, Activation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_problem(seed: u64, d: usize, n: usize, nf: usize, lambda: f64) -> (ModelConfig, FeatureBank, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ModelConfig::new(d, n, nf, lambda, 2.0, Activation::Relu).unwrap();
        let bank = FeatureBank::sample(nf, d, &mut rng).unwrap();
        let x = sample_sphere(n, d, &mut rng).unwrap();
        let y = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        (cfg, bank, Dataset::new(x, y).unwrap())
    }

    #[test]
    fn zero_response_gives_zero_weights() {
        let (cfg, bank, data) = random_problem(1, 4, 10, 6, 0.1);
        let data = data.with_responses(DVector::zeros(10)).unwrap();
        let fit = FittedRF::fit(cfg, bank, &data).unwrap();
        assert_eq!(fit.weights().norm(), 0.0);
    }

    #[test]
    fn huge_penalty_shrinks_weights() {
        let (cfg, bank, data) = random_problem(2, 4, 10, 6, 1e12);
        let fit = FittedRF::fit(cfg, bank, &data).unwrap();
        let zty = fit.design().tr_mul(data.y()).norm();
        // ‖â‖ ≤ ‖Zᵀy‖/λ' holds for every ridge solution; at λ = 1e12 the
        // weights are negligible in absolute terms as well.
        assert!(fit.weights().norm() <= zty / cfg.regularizer() * (1.0 + 1e-12));
        assert!(fit.weights().norm() <= 1e-6);
    }

    #[test]
    fn two_by_two_matches_cramer() {
        // n=3, N=2, d=2 with a hand-set design.
        let cfg = ModelConfig::new(2, 3, 2, 1.0, 1.0, Activation::Relu).unwrap();
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.2, 2.0, -1.0, 0.3]);
        let y = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let sol = ridge_fit(&z, &y, &cfg, SolveRoute::Auto).unwrap();
        let lam = 2.0 * 1.0 * 1.5 * 1.0;
        let (mut g00, mut g01, mut g11, mut b0, mut b1) = (lam, 0.0, lam, 0.0, 0.0);
        for i in 0..3 {
            g00 += z[(i, 0)] * z[(i, 0)];
            g01 += z[(i, 0)] * z[(i, 1)];
            g11 += z[(i, 1)] * z[(i, 1)];
            b0 += z[(i, 0)] * y[i];
            b1 += z[(i, 1)] * y[i];
        }
        let det = g00 * g11 - g01 * g01;
        let a0 = (b0 * g11 - g01 * b1) / det;
        let a1 = (g00 * b1 - g01 * b0) / det;
        assert!((sol.weights[0] - a0).abs() < 1e-12);
        assert!((sol.weights[1] - a1).abs() < 1e-12);
        assert_eq!(sol.route, SolveRoute::Primal);
    }

    #[test]
    fn primal_and_dual_agree() {
        for seed in 0..10 {
            let (cfg, bank, data) = random_problem(100 + seed, 5, 12, 30, 0.05);
            let p = FittedRF::fit_with(cfg, bank.clone(), &data, SolveRoute::Primal).unwrap();
            let d = FittedRF::fit_with(cfg, bank, &data, SolveRoute::Dual).unwrap();
            assert_eq!(d.route(), SolveRoute::Dual);
            let rel = (p.weights() - d.weights()).norm() / p.weights().norm();
            assert!(rel < 1e-8, "seed {seed}: rel {rel}");
        }
    }

    #[test]
    fn ridgeless_rank_deficient_uses_pinv() {
        // Duplicate feature columns make ZᵀZ exactly singular.
        let cfg = ModelConfig::new(2, 4, 2, 0.0, 1.0, Activation::Relu).unwrap();
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5, 0.0, 0.0]);
        let y = DVector::from_row_slice(&[1.0, 2.0, 0.5, 0.0]);
        let sol = ridge_fit(&z, &y, &cfg, SolveRoute::Primal).unwrap();
        assert!(sol.ridgeless_pinv);
        // Minimum-norm least squares splits the weight evenly.
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
        assert!((sol.weights[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_finite_design_rejected() {
        let cfg = ModelConfig::new(2, 2, 2, 1.0, 1.0, Activation::Relu).unwrap();
        let z = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        let y = DVector::from_row_slice(&[1.0, 2.0]);
        assert!(ridge_fit(&z, &y, &cfg, SolveRoute::Auto).is_err());
    }

    #[test]
    fn orthogonal_test_point_has_noise_floor_variance() {
        let s = 2.0;
        let theta = DMatrix::from_row_slice(2, 4, &[s, 0.0, 0.0, 0.0, 0.0, s, 0.0, 0.0]);
        let bank = FeatureBank::new(theta).unwrap();
        let x = DMatrix::from_row_slice(2, 4, &[s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, s]);
        let data = Dataset::new(x, DVector::from_row_slice(&[1.0, -1.0])).unwrap();
        let cfg = ModelConfig::new(4, 2, 2, 0.5, 3.0, Activation::Relu).unwrap();
        let fit = FittedRF::fit(cfg, bank, &data).unwrap();
        let probe = DVector::from_row_slice(&[0.0, 0.0, s, 0.0]);
        let g = fit.posterior_predictive(&probe).unwrap();
        assert_eq!(g.mean, 0.0);
        assert_eq!(g.variance, 1.0 / 3.0);
    }

    #[test]
    fn variance_matches_explicit_inverse() {
        let (cfg, bank, data) = random_problem(42, 2, 4, 3, 0.3);
        let fit = FittedRF::fit(cfg, bank.clone(), &data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let xt = sample_sphere(1, 2, &mut rng).unwrap().row(0).transpose();
        let g = fit.posterior_predictive(&xt).unwrap();

        let z = fit.design();
        let mut gram = z.transpose() * z;
        for i in 0..3 {
            gram[(i, i)] += cfg.regularizer();
        }
        let inv = gram.try_inverse().unwrap();
        let zt = feature_vector(&xt, &bank, cfg.activation).unwrap();
        let expected = (1.0 + (zt.transpose() * inv * &zt)[(0, 0)]) / cfg.phi;
        assert!((g.variance - expected).abs() < 1e-10);
        assert!(g.variance >= 1.0 / cfg.phi);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        for seed in 0..5 {
            let (cfg, bank, data) = random_problem(seed, 6, 20, 15, 0.01);
            let fit = FittedRF::fit(cfg, bank, &data).unwrap();
            let g = fit.objective_gradient(data.y(), fit.weights());
            let scale = fit.design().tr_mul(data.y()).norm();
            assert!(g.norm() <= 1e-8 * scale, "seed {seed}: {}", g.norm() / scale);
        }
    }
}
