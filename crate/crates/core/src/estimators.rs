//! Off-policy value estimates of the softmax policy `π_β` from logged data.

use alloc::vec;

use thiserror::Error;

use crate::domain::{DataError, LogDataset, ParamVector};
use crate::features::scores_into;
use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("no clicked events")]
    NoClicks,
    #[error("weight cap must be positive, got {0}")]
    InvalidCap(f64),
    #[error("parameters are for {params} items, dataset has {data}")]
    Dimension { params: usize, data: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

fn check(data: &LogDataset, beta: &ParamVector) -> Result<(), EstimatorError> {
    if data.is_empty() {
        return Err(EstimatorError::EmptyData);
    }
    if beta.num_items() != data.num_items {
        return Err(EstimatorError::Dimension {
            params: beta.num_items(),
            data: data.num_items,
        });
    }
    data.validate()?;
    Ok(())
}

/// `Σ_n c_n · w_n · π_β(a_n | x_n)` over clicked events, with the weight
/// produced by `weight(propensity)`.
fn weighted_click_mass(data: &LogDataset, beta: &ParamVector, weight: impl Fn(f64) -> f64) -> f64 {
    let k = data.num_items;
    let mut scores = vec![0.0; k];
    let mut probs = vec![0.0; k];
    data.events
        .iter()
        .filter(|e| e.click)
        .map(|e| {
            scores_into(e.context.views(), beta.as_slice(), &mut scores);
            math::softmax_into(&scores, &mut probs);
            weight(e.propensity) * probs[e.action.0]
        })
        .sum()
}

/// IPS estimate of clicks per event under `π_β`:
/// `(1/N) Σ_n c_n π_β(a_n | x_n) / π(a_n | x_n)`.
pub fn ips_value(data: &LogDataset, beta: &ParamVector) -> Result<f64, EstimatorError> {
    check(data, beta)?;
    Ok(weighted_click_mass(data, beta, |p| 1.0 / p) / data.len() as f64)
}

/// [`ips_value`] with weights `min(1/π, cap)`.
pub fn ips_value_clipped(
    data: &LogDataset,
    beta: &ParamVector,
    cap: f64,
) -> Result<f64, EstimatorError> {
    if !(cap > 0.0) {
        return Err(EstimatorError::InvalidCap(cap));
    }
    check(data, beta)?;
    Ok(weighted_click_mass(data, beta, |p| (1.0 / p).min(cap)) / data.len() as f64)
}

/// Jensen lower bound on `log Σ_n w_n c_n π_β(a_n | x_n)`:
/// `Σ w c log π_β / Σ w c + log Σ w c`.
pub fn jensen_lower_bound(data: &LogDataset, beta: &ParamVector) -> Result<f64, EstimatorError> {
    check(data, beta)?;
    let k = data.num_items;
    let mut scores = vec![0.0; k];
    let mut total_weight = 0.0;
    let mut weighted_log = 0.0;
    for e in data.events.iter().filter(|e| e.click) {
        scores_into(e.context.views(), beta.as_slice(), &mut scores);
        let log_pi = scores[e.action.0] - math::log_sum_exp(&scores);
        let w = e.weight();
        total_weight += w;
        weighted_log += w * log_pi;
    }
    if total_weight == 0.0 {
        return Err(EstimatorError::NoClicks);
    }
    Ok(weighted_log / total_weight + math::log(total_weight))
}

/// Click rate of the log and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ctr {
    pub ctr: f64,
    pub stderr: f64,
}

pub fn empirical_ctr(data: &LogDataset) -> Result<Ctr, EstimatorError> {
    if data.is_empty() {
        return Err(EstimatorError::EmptyData);
    }
    let n = data.len() as f64;
    let ctr = data.clicks() as f64 / n;
    Ok(Ctr {
        ctr,
        stderr: math::sqrt(ctr * (1.0 - ctr) / n),
    })
}
