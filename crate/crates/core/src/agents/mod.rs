//! Trainers that fit the shared score parameters from a bandit log.

mod objectives;
mod optimize;
mod prior;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::domain::{DataError, LogDataset, ParamVector};

pub use objectives::{
    obj_grad_bayes_map, obj_grad_contextual_bandit, obj_grad_likelihood, obj_grad_reweighted,
    ObjGrad,
};
pub use optimize::optimize;
pub use prior::{prior_precision_apply, PriorSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("objective constant in beta: no clicked events")]
    NoClicks,
    #[error("parameter length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite objective or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid fit options: {0}")]
    InvalidOptions(&'static str),
    #[error("invalid prior: {0}")]
    InvalidPrior(&'static str),
    #[error("bayes-map needs a prior")]
    MissingPrior,
    #[error("unknown method `{0}`")]
    UnknownMethod(alloc::string::String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop once the gradient infinity-norm is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Ridge `½·l2_floor·‖β‖²` subtracted from the point-estimator
    /// objectives. Zero disables it.
    pub l2_floor: f64,
    /// Upper bound on inverse propensity weights (reweighted and cb only).
    pub weight_cap: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 10_000,
            l2_floor: 0.0,
            weight_cap: None,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.grad_tol > 0.0) {
            return Err(FitError::InvalidOptions("grad_tol must be positive"));
        }
        if self.max_iters < 1 {
            return Err(FitError::InvalidOptions("max_iters must be at least 1"));
        }
        if !(self.l2_floor >= 0.0) || !self.l2_floor.is_finite() {
            return Err(FitError::InvalidOptions("l2_floor must be non-negative"));
        }
        if let Some(cap) = self.weight_cap {
            if !(cap > 0.0) {
                return Err(FitError::InvalidOptions("weight_cap must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: ParamVector,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    /// Accepted ascent steps.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial value.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Maximum likelihood logistic regression.
    Mle,
    /// Inverse-propensity reweighted likelihood.
    Reweighted,
    /// Contextual bandit: Jensen lower bound on the IPS value.
    ContextualBandit,
    /// MAP under the Kronecker-structured prior.
    BayesMap,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Mle,
        Method::Reweighted,
        Method::ContextualBandit,
        Method::BayesMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Reweighted => "reweighted",
            Method::ContextualBandit => "cb",
            Method::BayesMap => "bayes-map",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| FitError::UnknownMethod(s.into()))
    }
}

fn with_ridge(mut og: ObjGrad, beta: &[f64], l2: f64) -> ObjGrad {
    if l2 > 0.0 {
        og.0 -= 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>();
        for (g, b) in og.1.iter_mut().zip(beta) {
            *g -= l2 * b;
        }
    }
    og
}

/// Fits `method` to `data`. Point estimators start at zero, MAP at the prior
/// mean.
pub fn fit(
    method: Method,
    data: &LogDataset,
    prior: Option<&PriorSpec>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    data.validate()?;
    opts.validate()?;
    let k = data.num_items;
    let l2 = opts.l2_floor;
    match method {
        Method::Mle => optimize(
            |b| obj_grad_likelihood(b, data).map(|og| with_ridge(og, b, l2)),
            ParamVector::zeros(k),
            opts,
        ),
        Method::Reweighted => optimize(
            |b| obj_grad_reweighted(b, data, opts).map(|og| with_ridge(og, b, l2)),
            ParamVector::zeros(k),
            opts,
        ),
        Method::ContextualBandit => optimize(
            |b| obj_grad_contextual_bandit(b, data, opts).map(|og| with_ridge(og, b, l2)),
            ParamVector::zeros(k),
            opts,
        ),
        Method::BayesMap => {
            let prior = prior.ok_or(FitError::MissingPrior)?;
            prior.validate()?;
            optimize(
                |b| obj_grad_bayes_map(b, data, prior),
                ParamVector::filled(k, prior.mu),
                opts,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionId, BanditEvent, Context};
    use alloc::vec;

    fn event(views: &[u32], action: usize, click: bool, propensity: f64) -> BanditEvent {
        BanditEvent {
            user_id: 0,
            context: Context::new(views.to_vec()),
            action: ActionId(action),
            click,
            propensity,
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("ridge".parse::<Method>().is_err());
    }

    #[test]
    fn options_are_validated() {
        let bad = [
            FitOptions {
                grad_tol: 0.0,
                ..FitOptions::default()
            },
            FitOptions {
                max_iters: 0,
                ..FitOptions::default()
            },
            FitOptions {
                weight_cap: Some(-1.0),
                ..FitOptions::default()
            },
        ];
        for opts in bad {
            assert!(matches!(opts.validate(), Err(FitError::InvalidOptions(_))));
        }
    }

    #[test]
    fn mle_balance_point() {
        let data = LogDataset::with_events(
            2,
            vec![event(&[1, 0], 1, true, 0.5), event(&[1, 0], 1, false, 0.5)],
        );
        let res = fit(Method::Mle, &data, None, &FitOptions::default()).unwrap();
        assert!(res.converged);
        let score = crate::features::scores(&Context::new(vec![1, 0]), &res.beta).unwrap();
        assert!(score.as_slice()[1].abs() < 1e-4);
    }

    #[test]
    fn reweighted_with_unit_propensities_matches_mle() {
        let data = LogDataset::with_events(
            3,
            vec![
                event(&[1, 2, 0], 0, true, 1.0),
                event(&[1, 2, 0], 0, false, 1.0),
                event(&[0, 1, 1], 2, false, 1.0),
                event(&[0, 1, 1], 2, true, 1.0),
                event(&[0, 1, 1], 2, false, 1.0),
                event(&[3, 0, 1], 1, true, 1.0),
                event(&[3, 0, 1], 1, false, 1.0),
            ],
        );
        let opts = FitOptions::default();
        let a = fit(Method::Mle, &data, None, &opts).unwrap();
        let b = fit(Method::Reweighted, &data, None, &opts).unwrap();
        for (x, y) in a.beta.as_slice().iter().zip(b.beta.as_slice()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn separable_mle_never_reaches_tolerance() {
        // Item 0 always clicked, item 1 never: the optimum is at infinity.
        let data = LogDataset::with_events(
            2,
            vec![event(&[1, 0], 0, true, 0.5), event(&[1, 0], 1, false, 0.5)],
        );
        let opts = FitOptions {
            grad_tol: 1e-300,
            max_iters: 20,
            ..FitOptions::default()
        };
        let res = fit(Method::Mle, &data, None, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 20);
        assert!(res.beta.get(0, 0) > 5.0 && res.beta.get(0, 1) < -5.0);
        assert!(res
            .objective_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0)));
    }

    #[test]
    fn map_without_data_returns_prior_mean() {
        let prior = PriorSpec::recommended(4);
        let res = fit(
            Method::BayesMap,
            &LogDataset::new(4),
            Some(&prior),
            &FitOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert!(res.beta.as_slice().iter().all(|&b| b == -6.0));
        // One view of item 0, recommending any item: σ(-6) ≈ 0.0025.
        let ctx = Context::new(vec![1, 0, 0, 0]);
        let s = crate::features::scores(&ctx, &res.beta).unwrap();
        for &x in s.as_slice() {
            assert_eq!(libm::round(crate::math::sigmoid(x) * 1e4), 25.0);
        }
        assert_eq!(
            fit(
                Method::BayesMap,
                &LogDataset::new(4),
                None,
                &FitOptions::default()
            ),
            Err(FitError::MissingPrior)
        );
    }

    #[test]
    fn invalid_data_is_rejected_before_fitting() {
        let data = LogDataset::with_events(2, vec![event(&[1, 0], 0, true, 0.0)]);
        assert!(matches!(
            fit(Method::Mle, &data, None, &FitOptions::default()),
            Err(FitError::Data(DataError::NonpositivePropensity { .. }))
        ));
    }
}
