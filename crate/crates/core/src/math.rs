//! Scalar numerics shared by the objectives and the simulator.
//!
//! All transcendental functions go through `libm` so results are identical
//! with or without `std`.

pub use libm::{exp, log, log1p, sqrt};

/// Logistic sigmoid, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `log σ(x)`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -log1p(exp(-x))
    } else {
        x - log1p(exp(x))
    }
}

/// `log(1 - σ(x)) = log σ(-x)`.
#[inline]
pub fn log_one_minus_sigmoid(x: f64) -> f64 {
    log_sigmoid(-x)
}

/// `log Σ exp(v)` with max subtraction. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| exp(v - max)).sum();
    max + log(sum)
}

/// Writes `softmax(values)` into `out`, which must have the same length.
pub fn softmax_into(values: &[f64], out: &mut [f64]) {
    debug_assert_eq!(values.len(), out.len());
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(values) {
        *o = exp(v - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Index of the first maximum. Ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((log_sigmoid(-700.0) + 700.0).abs() < 1e-12);
        assert!(log_sigmoid(700.0).abs() < 1e-300);
        assert!(log_one_minus_sigmoid(700.0).is_finite());
    }

    #[test]
    fn log_sum_exp_matches_naive_for_small_inputs() {
        let v = [0.1, -0.3, 2.0];
        let naive = log(v.iter().map(|&x| exp(x)).sum::<f64>());
        assert!((log_sum_exp(&v) - naive).abs() < 1e-14);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + log(2.0))).abs() < 1e-10);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
