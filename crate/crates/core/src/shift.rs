//! Linear regression of a nonlinear function under covariate shift, with and
//! without importance weights.
//!
//! Inputs are drawn from a skewed source density (Beta(2, 5)) while the
//! model is judged on a uniform target density. A straight line cannot
//! follow `sin(πx)`, so the unweighted fit spends its capacity where the
//! source data is dense; weighting each sample by `target(x) / source(x)`
//! moves the fit toward the best line for the target domain.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use thiserror::Error;

pub const GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShiftError {
    #[error("xs, ys and weights must have equal lengths")]
    LengthMismatch,
    #[error("weights must be finite and non-negative")]
    InvalidWeight,
    #[error("degenerate design: fewer than two distinct weighted inputs")]
    Degenerate,
    #[error("invalid demo config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Minimizes `Σ w_i (y_i - slope·x_i - intercept)²` in closed form.
pub fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit, ShiftError> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(ShiftError::LengthMismatch);
    }
    if ws.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(ShiftError::InvalidWeight);
    }
    let total: f64 = ws.iter().sum();
    if !(total > 0.0) {
        return Err(ShiftError::Degenerate);
    }
    let mean = |v: &[f64]| v.iter().zip(ws).map(|(a, w)| a * w).sum::<f64>() / total;
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    let first = xs.iter().zip(ws).find(|(_, &w)| w > 0.0).map(|(&x, _)| x);
    let distinct = xs
        .iter()
        .zip(ws)
        .any(|(&x, &w)| w > 0.0 && Some(x) != first);
    if !distinct || !(sxx > 0.0) {
        return Err(ShiftError::Degenerate);
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDemoConfig {
    pub n_samples: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for ShiftDemoConfig {
    fn default() -> Self {
        Self {
            n_samples: 200,
            noise_sd: 0.05,
            seed: 0,
        }
    }
}

/// Noise-free mean squared errors of the two fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport {
    /// Unweighted fit, averaged under the source density.
    pub mse_source_unweighted: f64,
    /// Unweighted fit, averaged uniformly over `[0, 1]`.
    pub mse_target_unweighted: f64,
    /// Importance-weighted fit, averaged uniformly over `[0, 1]`.
    pub mse_target_weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    pub report: ShiftReport,
    pub unweighted: LinearFit,
    pub weighted: LinearFit,
    /// Sampled `(x, y)` pairs.
    pub samples: Vec<(f64, f64)>,
}

/// `sin(πx)`.
pub fn truth(x: f64) -> f64 {
    libm::sin(core::f64::consts::PI * x)
}

/// Beta(2, 5) density `30 x (1 - x)⁴`.
pub fn source_density(x: f64) -> f64 {
    let r = 1.0 - x;
    30.0 * x * r * r * r * r
}

/// Importance weight `target(x) / source(x)` with a uniform target.
pub fn importance_weight(x: f64) -> f64 {
    1.0 / source_density(x)
}

fn grid() -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(|g| (g as f64 + 0.5) / GRID_POINTS as f64)
}

fn mse(fit: &LinearFit, f: &impl Fn(f64) -> f64, density: impl Fn(f64) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for x in grid() {
        let d = density(x);
        let e = fit.predict(x) - f(x);
        num += d * e * e;
        den += d;
    }
    num / den
}

pub fn run_shift_demo(config: &ShiftDemoConfig) -> Result<ShiftOutcome, ShiftError> {
    run_shift_demo_with_truth(config, truth)
}

/// As [`run_shift_demo`] with a caller-supplied regression function.
pub fn run_shift_demo_with_truth(
    config: &ShiftDemoConfig,
    f: impl Fn(f64) -> f64,
) -> Result<ShiftOutcome, ShiftError> {
    if config.n_samples < 2 {
        return Err(ShiftError::InvalidConfig("n_samples must be at least 2"));
    }
    if !(config.noise_sd >= 0.0) || !config.noise_sd.is_finite() {
        return Err(ShiftError::InvalidConfig("noise_sd must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let source = Beta::new(2.0, 5.0).expect("valid beta parameters");
    let noise = Normal::new(0.0, config.noise_sd).expect("valid noise sd");
    let samples: Vec<(f64, f64)> = (0..config.n_samples)
        .map(|_| {
            let x: f64 = source.sample(&mut rng);
            let y = f(x) + noise.sample(&mut rng);
            (x, y)
        })
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ones = alloc::vec![1.0; xs.len()];
    let ws: Vec<f64> = xs.iter().map(|&x| importance_weight(x)).collect();
    let unweighted = weighted_least_squares(&xs, &ys, &ones)?;
    let weighted = weighted_least_squares(&xs, &ys, &ws)?;
    let report = ShiftReport {
        mse_source_unweighted: mse(&unweighted, &f, source_density),
        mse_target_unweighted: mse(&unweighted, &f, |_| 1.0),
        mse_target_weighted: mse(&weighted, &f, |_| 1.0),
    };
    Ok(ShiftOutcome {
        report,
        unweighted,
        weighted,
        samples,
    })
}

/// Residual gradient of the weighted loss at `fit` (zero at the optimum).
pub fn normal_equation_residual(xs: &[f64], ys: &[f64], ws: &[f64], fit: &LinearFit) -> (f64, f64) {
    let mut d_slope = 0.0;
    let mut d_intercept = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let r = y - fit.predict(x);
        d_slope += w * r * x;
        d_intercept += w * r;
    }
    (d_slope, d_intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_line_is_recovered() {
        let xs = [0.1, 0.4, 0.5, 0.9];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 0.7).collect();
        let fit = weighted_least_squares(&xs, &ys, &[1.0, 3.0, 0.2, 7.0]).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-10);
        assert!((fit.intercept + 0.7).abs() < 1e-10);
    }

    #[test]
    fn equal_weights_are_ordinary_least_squares() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 2.0, 5.0];
        // OLS by hand: x̄ = 1.5, ȳ = 2.5, Sxy = 6, Sxx = 5.
        let fit = weighted_least_squares(&xs, &ys, &[2.0; 4]).unwrap();
        assert!((fit.slope - 1.2).abs() < 1e-12);
        assert!((fit.intercept - 0.7).abs() < 1e-12);
    }

    #[test]
    fn grid_search_oracle() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 2.0, 1.0];
        let ws = [1.0, 2.0, 0.5];
        let loss = |m: f64, c: f64| {
            xs.iter()
                .zip(&ys)
                .zip(&ws)
                .map(|((x, y), w)| w * (y - m * x - c) * (y - m * x - c))
                .sum::<f64>()
        };
        // Coarse grid, then a 1e-5 grid around the coarse minimizer.
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in -300..=300 {
            for j in -300..=300 {
                let (m, c) = (i as f64 * 0.01, j as f64 * 0.01);
                let l = loss(m, c);
                if l < best.2 {
                    best = (m, c, l);
                }
            }
        }
        let (m0, c0) = (best.0, best.1);
        for i in -1000..=1000 {
            for j in -1000..=1000 {
                let (m, c) = (m0 + i as f64 * 1e-5, c0 + j as f64 * 1e-5);
                let l = loss(m, c);
                if l < best.2 {
                    best = (m, c, l);
                }
            }
        }
        let fit = weighted_least_squares(&xs, &ys, &ws).unwrap();
        assert!((fit.slope - best.0).abs() < 1e-4, "{fit:?} vs {best:?}");
        assert!((fit.intercept - best.1).abs() < 1e-4);
    }

    #[test]
    fn degenerate_designs() {
        assert_eq!(
            weighted_least_squares(&[1.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]),
            Err(ShiftError::Degenerate)
        );
        assert_eq!(
            weighted_least_squares(&[1.0, 2.0], &[0.0, 1.0], &[1.0, 0.0]),
            Err(ShiftError::Degenerate)
        );
        assert_eq!(
            weighted_least_squares(&[1.0], &[0.0, 1.0], &[1.0]),
            Err(ShiftError::LengthMismatch)
        );
        assert_eq!(
            weighted_least_squares(&[1.0, 2.0], &[0.0, 1.0], &[1.0, -1.0]),
            Err(ShiftError::InvalidWeight)
        );
    }

    #[test]
    fn normal_equations_hold_at_solution() {
        let xs = [0.05, 0.2, 0.31, 0.5, 0.77];
        let ys = [0.3, -0.1, 0.8, 0.45, 0.2];
        let ws = [4.0, 0.5, 1.0, 2.5, 10.0];
        let fit = weighted_least_squares(&xs, &ys, &ws).unwrap();
        let (a, b) = normal_equation_residual(&xs, &ys, &ws, &fit);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
    }

    #[test]
    fn linear_truth_both_fits_correct() {
        let config = ShiftDemoConfig::default();
        let out = run_shift_demo_with_truth(&config, |x| 0.8 * x - 0.1).unwrap();
        for fit in [out.unweighted, out.weighted] {
            assert!((fit.slope - 0.8).abs() < 0.1, "{fit:?}");
            assert!((fit.intercept + 0.1).abs() < 0.05, "{fit:?}");
        }
        assert!(out.report.mse_target_weighted < 1e-2);
        assert!(out.report.mse_target_unweighted < 1e-2);
    }

    #[test]
    fn default_demo_weighting_helps() {
        let out = run_shift_demo(&ShiftDemoConfig::default()).unwrap();
        let r = out.report;
        assert!(r.mse_target_weighted < r.mse_target_unweighted, "{r:?}");
        let quiet = run_shift_demo(&ShiftDemoConfig {
            noise_sd: 0.0,
            ..ShiftDemoConfig::default()
        })
        .unwrap()
        .report;
        assert!(
            quiet.mse_target_weighted < quiet.mse_target_unweighted,
            "{quiet:?}"
        );
    }

    #[test]
    fn density_integrates_to_one() {
        let total: f64 = grid().map(source_density).sum::<f64>() / GRID_POINTS as f64;
        assert!((total - 1.0).abs() < 1e-5);
        assert_eq!(
            vec![importance_weight(0.5)],
            vec![1.0 / (30.0 * 0.5 * 0.0625)]
        );
    }
}
