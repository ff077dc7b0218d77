//! Randomised invariants across modules.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use contamrf::contamination::{
    lower_set_prob, predictive_envelopes, upper_set_prob, ContaminatingDensity, ContaminationBudget,
};
use contamrf::experiments::{bias_variance_sweep, SweepConfig, TeacherConfig};
use contamrf::rf_core::{
    gaussian_pdf, ridge_fit, sample_sphere, Activation, Dataset, FeatureBank, FittedRF, ModelConfig,
    PredictiveGaussian, SolveRoute,
};
use contamrf::robust_uq::{ihdr_outer, truncated_normal_variance, IhdrRegion, TruncationWindow};

fn problem(seed: u64, d: usize, n: usize, nf: usize, lambda: f64) -> (ModelConfig, FeatureBank, Dataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig::new(d, n, nf, lambda, 2.0, Activation::Relu).unwrap();
    let x = sample_sphere(n, d, &mut rng).unwrap();
    let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    (cfg, FeatureBank::sample(nf, d, &mut rng).unwrap(), Dataset::new(x, y).unwrap())
}

fn on_sphere(m: &DMatrix<f64>) -> bool {
    let r = (m.ncols() as f64).sqrt();
    m.row_iter().all(|row| ((row.norm() - r) / r).abs() <= 1e-10)
}

#[test]
fn predictive_variance_never_grows_with_more_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let d = rng.random_range(2..=10);
        let n = rng.random_range(2..=30);
        let nf = rng.random_range(2..=30);
        let reg = 10f64.powf(rng.random_range(-3.0..1.0));
        let x = sample_sphere(n + 1, d, &mut rng).unwrap();
        let y = DVector::from_fn(n + 1, |_, _| rng.random_range(-1.0..1.0));
        let bank = FeatureBank::sample(nf, d, &mut rng).unwrap();
        let xt = sample_sphere(1, d, &mut rng).unwrap().row(0).transpose();
        let variance = |rows: usize| {
            // λ chosen so that d·ψ1·ψ2·λ equals `reg` at this n.
            let lambda = reg * d as f64 / (nf as f64 * rows as f64);
            let cfg = ModelConfig::new(d, rows, nf, lambda, 1.5, Activation::Tanh).unwrap();
            assert!((cfg.regularizer() - reg).abs() <= 1e-14 * reg);
            let data = Dataset::new(x.rows(0, rows).into_owned(), y.rows(0, rows).into_owned()).unwrap();
            FittedRF::fit(cfg, bank.clone(), &data).unwrap().posterior_predictive(&xt).unwrap().variance
        };
        let (before, after) = (variance(n), variance(n + 1));
        assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
    }
}

#[test]
fn decomposition_within_three_standard_errors() {
    let cfg = SweepConfig {
        d: 8,
        psi2: 2.0,
        psi1_grid: vec![0.5, 1.0, 2.0, 3.0, 4.0],
        trials: 10,
        test_points: 40,
        ..SweepConfig::default()
    };
    for row in bias_variance_sweep(&cfg, &TeacherConfig::rf_default(8)).unwrap() {
        assert!((row.mse - row.bias2 - row.variance).abs() <= 3.0 * row.mse_se + 1e-12, "{row:?}");
        assert!(row.mse.is_finite() && row.bias2 >= 0.0 && row.variance >= 0.0);
    }
}

#[test]
fn constant_teacher_is_learned_with_many_features() {
    let cfg = SweepConfig {
        d: 32,
        psi2: 3.0,
        psi1_grid: vec![6.0, 8.0],
        lambda: 1e-6,
        trials: 5,
        test_points: 50,
        ..SweepConfig::default()
    };
    let teacher = TeacherConfig::linear(1.0, vec![0.0; 32], 0.0);
    let rows = bias_variance_sweep(&cfg, &teacher).unwrap();
    assert!(rows[1].mse <= 1e-2, "{:?}", rows[1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn primal_and_dual_agree(seed in any::<u64>(), d in 1usize..8, n in 1usize..20, extra in 1usize..20, lambda in 1e-4f64..1.0) {
        let nf = n + extra;
        let (cfg, bank, data) = problem(seed, d, n, nf, lambda);
        let z = contamrf::rf_core::feature_map(data.x(), &bank, cfg.activation).unwrap();
        let p = ridge_fit(&z, data.y(), &cfg, SolveRoute::Primal).unwrap().weights;
        let q = ridge_fit(&z, data.y(), &cfg, SolveRoute::Dual).unwrap().weights;
        prop_assert!((&p - &q).norm() <= 1e-8 * p.norm().max(1e-12), "{} vs {}", p.norm(), q.norm());
    }

    #[test]
    fn gradient_vanishes_by_finite_differences(seed in any::<u64>(), d in 1usize..8, n in 2usize..25, nf in 2usize..25, lambda in 1e-3f64..1.0) {
        let (cfg, bank, data) = problem(seed, d, n, nf, lambda);
        let model = FittedRF::fit(cfg, bank, &data).unwrap();
        let a = model.weights().clone();
        let scale = data.y().norm_squared().max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let h = 1e-6;
        for _ in 0..10 {
            let j = rng.random_range(0..nf);
            let mut plus = a.clone();
            let mut minus = a.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (model.objective(data.y(), &plus) - model.objective(data.y(), &minus)) / (2.0 * h);
            prop_assert!(fd.abs() <= 1e-6 * scale, "coordinate {j}: {fd}");
        }
        prop_assert!(model.objective_gradient(data.y(), &a).norm() <= 1e-8 * scale);
    }

    #[test]
    fn sampled_points_stay_on_sphere(seed in any::<u64>(), count in 1usize..40, d in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_sphere(count, d, &mut rng).unwrap();
        prop_assert!(on_sphere(&x));
        let bank = FeatureBank::sample(count, d, &mut rng).unwrap();
        prop_assert!(on_sphere(bank.theta()));
    }

    #[test]
    fn lower_bound_below_base_with_equality_only_at_zero(mean in -5.0f64..5.0, var in 0.01f64..10.0, t in -8.0f64..8.0, e in 0usize..5) {
        let eta = [0.0, 0.05, 0.1, 0.3, 0.9][e];
        let base = PredictiveGaussian::new(mean, var).unwrap();
        let w = TruncationWindow::symmetric(&base, 3.0).unwrap();
        let u = ContaminatingDensity::uniform(w.a, w.b).unwrap();
        let pair = predictive_envelopes(base, ContaminationBudget::new(0.1, eta).unwrap(), u.clone());
        let y = mean + t * base.sd();
        let p = gaussian_pdf(&base, y);
        let lo = pair.lower_bound_at(y);
        prop_assert!(lo <= p);
        if p > 0.0 {
            prop_assert_eq!(lo == p, eta == 0.0);
        }
        let hi = pair.upper_bound_at(y);
        prop_assert!(hi >= (1.0 - eta) * p);
        if u.density(y) >= p {
            prop_assert!(hi >= p * (1.0 - 1e-15));
        }
    }

    #[test]
    fn set_functions_are_conjugate(p in 0.0f64..=1.0, eps in 0.0f64..=1.0) {
        let lower = lower_set_prob(p, eps, false).unwrap();
        let upper = upper_set_prob(1.0 - p, eps, false).unwrap();
        prop_assert!((lower + upper - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn ihdr_grows_with_eta(mean in -3.0f64..3.0, var in 0.1f64..5.0, a in 0usize..3, eta in 0.0f64..1.0) {
        let alpha = [0.05, 0.1, 0.2][a];
        let base = PredictiveGaussian::new(mean, var).unwrap();
        let inner = ihdr_outer(&base, alpha, 0.0).unwrap();
        let outer = ihdr_outer(&base, alpha, eta).unwrap();
        prop_assert!(outer.adjusted_level >= inner.adjusted_level);
        match (inner.region, outer.region) {
            (_, IhdrRegion::WholeLine) => {}
            (IhdrRegion::Interval { lo: l0, hi: h0 }, IhdrRegion::Interval { lo: l1, hi: h1 }) => {
                prop_assert!(l1 <= l0 && h0 <= h1);
            }
            (IhdrRegion::WholeLine, IhdrRegion::Interval { .. }) => prop_assert!(false, "inner whole line, outer interval"),
        }
    }

    #[test]
    fn truncation_shrinks_variance(mean in -3.0f64..3.0, var in 0.01f64..10.0, k in 0.5f64..40.0) {
        let base = PredictiveGaussian::new(mean, var).unwrap();
        let v = truncated_normal_variance(&base, &TruncationWindow::symmetric(&base, k).unwrap()).unwrap();
        prop_assert!(v <= var);
        if k >= 10.0 {
            prop_assert!((v - var).abs() <= 1e-12 * var);
        }
    }
}
