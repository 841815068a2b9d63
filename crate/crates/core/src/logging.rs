//! Behavior policies that generate logs, and propensity-recording sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::domain::{ActionId, Context};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("inverse popularity needs at least two items")]
    SingleItem,
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("unknown logging policy `{0}`")]
    UnknownPolicy(alloc::string::String),
    #[error(transparent)]
    Dimension(#[from] crate::features::DimensionMismatch),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoggingPolicy {
    Popularity,
    InversePopularity,
    Uniform,
}

impl LoggingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            LoggingPolicy::Popularity => "popularity",
            LoggingPolicy::InversePopularity => "inverse-popularity",
            LoggingPolicy::Uniform => "uniform",
        }
    }

    pub fn probs(self, context: &Context) -> Result<Vec<f64>, PolicyError> {
        match self {
            LoggingPolicy::Popularity => Ok(popularity_probs(context)),
            LoggingPolicy::InversePopularity => inverse_popularity_probs(context),
            LoggingPolicy::Uniform => Ok(uniform_probs(context.len())),
        }
    }
}

impl fmt::Display for LoggingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LoggingPolicy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "popularity" => Ok(LoggingPolicy::Popularity),
            "inverse-popularity" => Ok(LoggingPolicy::InversePopularity),
            "uniform" => Ok(LoggingPolicy::Uniform),
            other => Err(PolicyError::UnknownPolicy(other.into())),
        }
    }
}

/// `π_pop(a|x) = x_a / Σ x`. A user with no views gets the uniform policy.
pub fn popularity_probs(context: &Context) -> Vec<f64> {
    let total = context.total();
    if total == 0 {
        return uniform_probs(context.len());
    }
    let total = total as f64;
    context
        .views()
        .iter()
        .map(|&v| f64::from(v) / total)
        .collect()
}

/// `π_inv(a|x) = (1 - π_pop(a|x)) / (K - 1)`.
pub fn inverse_popularity_probs(context: &Context) -> Result<Vec<f64>, PolicyError> {
    if context.len() < 2 {
        return Err(PolicyError::SingleItem);
    }
    let pop = popularity_probs(context);
    let denom: f64 = pop.iter().map(|p| 1.0 - p).sum();
    Ok(pop.iter().map(|p| (1.0 - p) / denom).collect())
}

pub fn uniform_probs(num_items: usize) -> Vec<f64> {
    vec![1.0 / num_items as f64; num_items]
}

/// Draws an action from `probs` and returns it with its probability.
///
/// Zero-probability entries are never returned, so the propensity is always
/// positive.
pub fn sample_action<R: Rng + ?Sized>(
    probs: &[f64],
    rng: &mut R,
) -> Result<(ActionId, f64), PolicyError> {
    if let Some((index, &value)) = probs.iter().enumerate().find(|(_, &p)| !(p >= 0.0)) {
        return Err(PolicyError::NegativeProbability { index, value });
    }
    let total: f64 = probs.iter().sum();
    if !((total - 1.0).abs() <= 1e-9) {
        return Err(PolicyError::NotNormalized(total));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        cumulative += p;
        if u < cumulative {
            return Ok((ActionId(i), p));
        }
    }
    // u landed in the rounding gap above the final cumulative sum.
    Ok((ActionId(last_positive), probs[last_positive]))
}
