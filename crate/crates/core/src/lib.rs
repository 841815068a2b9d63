//! Training and evaluating recommendation policies from logged bandit
//! feedback.
//!
//! Every method in this crate shares one parameterization: a vector `beta`
//! of length `K * K` scoring action `a` for a user with organic view counts
//! `x` as `(x ⊗ e_a)ᵀ beta`. Four trainers fit `beta` from logs:
//!
//! * maximum likelihood logistic regression on the logged clicks,
//! * the same likelihood reweighted by inverse propensities,
//! * a contextual bandit that maximizes a Jensen lower bound on the IPS
//!   value of a softmax policy,
//! * MAP estimation under a Kronecker-structured Gaussian prior.
//!
//! All of them deploy through the same greedy rule
//! ([`features::greedy_action`]). The [`simulator`] module provides a small
//! recommendation environment with exact ground-truth oracles, and
//! [`estimators`] holds the off-policy value estimates.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI, and
//! the experiment harness live in the `banditfit` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agents;
pub mod domain;
pub mod estimators;
pub mod features;
pub mod logging;
pub mod math;
pub mod policy;
pub mod shift;
pub mod simulator;

pub use agents::{fit, FitError, FitOptions, FitResult, Method, PriorSpec};
pub use domain::{ActionId, BanditEvent, Context, DataError, LogDataset, ParamVector};
pub use logging::LoggingPolicy;
pub use policy::Policy;
pub use simulator::{Env, SimConfig, SimError};
