//! Embedded property suites run by `contamrf selftest`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contamination::{
    discrete_envelope_oracle, lower_set_prob, predictive_envelopes, upper_set_prob, ContaminatingDensity,
    ContaminationBudget,
};
use crate::rf_core::{
    feature_map, sample_sphere, Activation, Dataset, FeatureBank, FittedRF, ModelConfig, PredictiveGaussian,
};
use crate::robust_uq::{normal_cdf, normal_quantile, truncated_normal_variance, variance_chain, TruncationWindow};

/// Environment variable naming a suite whose inequalities are flipped.
pub const FAULT_ENV: &str = "CONTAMRF_SELFTEST_FAULT";

pub const SUITES: [&str; 6] = ["quadrature", "quantile", "discrete_oracle", "variance_chain", "conjugacy", "map_ridge"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub millis: f64,
    /// First failing assertion, if any.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failure.is_none())
    }

    pub fn first_failure(&self) -> Option<&SuiteOutcome> {
        self.suites.iter().find(|s| s.failure.is_some())
    }
}

type Outcome = std::result::Result<(), String>;

struct Check {
    fault: bool,
}

impl Check {
    fn holds(&self, cond: bool, what: impl FnOnce() -> String) -> Outcome {
        if cond != self.fault {
            Ok(())
        } else {
            Err(what())
        }
    }
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn quadrature(c: &Check) -> Outcome {
    let unit = PredictiveGaussian::standard();
    for k in [1.0, 2.0, 3.0] {
        let w = TruncationWindow::symmetric(&unit, k).map_err(err)?;
        let mass = simpson(|y| unit.pdf(y), -k, k, 4000);
        let second = simpson(|y| y * y * unit.pdf(y), -k, k, 4000) / mass;
        let closed = truncated_normal_variance(&unit, &w).map_err(err)?;
        c.holds(((closed - second) / second).abs() <= 1e-6, || {
            format!("truncated variance at k={k}: {closed} vs quadrature {second}")
        })?;
    }
    let base = PredictiveGaussian::new(0.3, 1.7).map_err(err)?;
    let w = TruncationWindow::symmetric(&base, 3.0).map_err(err)?;
    let eta = 0.1;
    let pair = predictive_envelopes(
        base,
        ContaminationBudget::new(0.05, eta).map_err(err)?,
        ContaminatingDensity::uniform(w.a, w.b).map_err(err)?,
    );
    let (lo, hi) = (base.mean - 12.0 * base.sd(), base.mean + 12.0 * base.sd());
    let pieces = [lo, w.a, w.b, hi];
    let integrate = |f: &dyn Fn(f64) -> f64| -> f64 {
        pieces
            .windows(2)
            .map(|p| {
                let nudge = (p[1] - p[0]) * 1e-12;
                simpson(|y| f(y.clamp(p[0] + nudge, p[1] - nudge)), p[0], p[1], 4000)
            })
            .sum()
    };
    let lower = integrate(&|y| pair.lower_bound_at(y));
    let upper = integrate(&|y| pair.upper_bound_at(y));
    c.holds((lower - (1.0 - eta)).abs() <= 1e-6, || format!("lower envelope mass {lower}, expected {}", 1.0 - eta))?;
    c.holds((upper - 1.0).abs() <= 1e-6, || format!("upper envelope mass {upper}, expected 1"))
}

fn quantile(c: &Check) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let p: f64 = rng.random_range(1e-6..1.0 - 1e-6);
        let x = normal_quantile(p).map_err(err)?;
        let back = normal_cdf(x);
        c.holds((back - p).abs() <= 1e-9, || format!("quantile round trip at p={p}: {back}"))?;
    }
    Ok(())
}

fn discrete_oracle(c: &Check) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let cells = rng.random_range(5..=60);
        let grid: Vec<f64> = (0..=cells).map(|i| -4.0 + 8.0 * i as f64 / cells as f64).collect();
        let raw: Vec<f64> = grid.windows(2).map(|w| normal_cdf(w[1]) - normal_cdf(w[0])).collect();
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
        let start = rng.random_range(0..cells);
        let query: Vec<usize> = (start..cells.min(start + rng.random_range(1..=cells))).collect();
        let (eps, eta) = (0.05, 0.1);
        let b = discrete_envelope_oracle(&grid, &masses, eps, eta, &query).map_err(err)?;
        let u_q = query.len() as f64 / cells as f64;
        c.holds(b.lower_mass <= b.base_mass && b.base_mass <= b.upper_mass, || {
            format!("oracle interval {b:?} misses baseline")
        })?;
        c.holds(b.lower_mass <= (1.0 - eta) * b.base_mass + 1e-12, || {
            format!("oracle lower {} above (1-eta)*base", b.lower_mass)
        })?;
        c.holds(b.upper_mass >= (1.0 - eta) * b.base_mass + eta * u_q - 1e-12, || {
            format!("oracle upper {} below bound", b.upper_mass)
        })?;
    }
    Ok(())
}

fn chain(c: &Check) -> Outcome {
    let unit = PredictiveGaussian::standard();
    let ch = variance_chain(&unit, 0.1, &TruncationWindow::symmetric(&unit, 3.0).map_err(err)?).map_err(err)?;
    c.holds((ch.upper_bound - 1.176003).abs() <= 1e-6, || {
        format!("chain upper bound {} at eta=0.1, k=3", ch.upper_bound)
    })?;
    for eta in [0.01, 0.05, 0.1, 0.2, 0.5] {
        for s2 in [0.25, 1.0, 4.0] {
            for k in [2.0, 2.5, 3.0] {
                let base = PredictiveGaussian::new(0.0, s2).map_err(err)?;
                let ch =
                    variance_chain(&base, eta, &TruncationWindow::symmetric(&base, k).map_err(err)?).map_err(err)?;
                c.holds(!ch.condition_ok || ch.exact_ordering_holds(), || {
                    format!("variance chain broken at eta={eta}, s2={s2}, k={k}")
                })?;
            }
        }
    }
    Ok(())
}

fn conjugacy(c: &Check) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (p, eps): (f64, f64) = (rng.random(), rng.random());
        let lower = lower_set_prob(p, eps, false).map_err(err)?;
        let upper = upper_set_prob(1.0 - p, eps, false).map_err(err)?;
        c.holds((lower - (1.0 - upper)).abs() <= 1e-15, || {
            format!("conjugacy at p={p}, eps={eps}: {lower} vs {}", 1.0 - upper)
        })?;
        c.holds(lower <= p && p <= upper_set_prob(p, eps, false).map_err(err)?, || format!("set bounds miss p={p}"))?;
    }
    Ok(())
}

fn map_ridge(c: &Check) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let d = rng.random_range(2..=8);
        let n = rng.random_range(2..=24);
        let nf = rng.random_range(2..=24);
        let cfg = ModelConfig::new(d, n, nf, rng.random_range(1e-3..1.0), 2.0, Activation::Relu).map_err(err)?;
        let x = sample_sphere(n, d, &mut rng).map_err(err)?;
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let bank = FeatureBank::sample(nf, d, &mut rng).map_err(err)?;
        let data = Dataset::new(x.clone(), y.clone()).map_err(err)?;
        let model = FittedRF::fit(cfg, bank.clone(), &data).map_err(err)?;
        let z = feature_map(&x, &bank, cfg.activation).map_err(err)?;
        let gram = z.tr_mul(&z) + DMatrix::identity(nf, nf) * cfg.regularizer();
        let a = gram.lu().solve(&z.tr_mul(&y)).ok_or("reference solve failed")?;
        let xm = sample_sphere(1, d, &mut rng).map_err(err)?;
        let xt = xm.row(0).transpose();
        let zt = feature_map(&xm, &bank, cfg.activation).map_err(err)?.row(0).transpose();
        let want = zt.dot(&a);
        let got = model.posterior_predictive(&xt).map_err(err)?.mean;
        c.holds((got - want).abs() <= 1e-9 * want.abs().max(1.0), || format!("posterior mean {got} vs ridge {want}"))?;
    }
    Ok(())
}

/// Runs every suite; `fault` names a suite whose checks are inverted.
pub fn run_selftest(fault: Option<&str>) -> SelftestReport {
    let runners: [fn(&Check) -> Outcome; 6] = [quadrature, quantile, discrete_oracle, chain, conjugacy, map_ridge];
    let suites = SUITES
        .iter()
        .zip(runners)
        .map(|(name, run)| {
            let start = Instant::now();
            let failure = run(&Check { fault: fault == Some(*name) }).err();
            SuiteOutcome { name, millis: start.elapsed().as_secs_f64() * 1e3, failure }
        })
        .collect();
    SelftestReport { suites }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let r = run_selftest(None);
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn fault_is_reported_for_named_suite() {
        for name in SUITES {
            let r = run_selftest(Some(name));
            assert_eq!(r.first_failure().unwrap().name, name);
            assert_eq!(r.suites.iter().filter(|s| s.failure.is_some()).count(), 1);
        }
    }
}
