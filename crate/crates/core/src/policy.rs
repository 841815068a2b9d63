//! Any policy the simulator can play or evaluate.

use alloc::vec;
use alloc::vec::Vec;

use crate::domain::{ActionId, Context, ParamVector};
use crate::features;
use crate::logging::{LoggingPolicy, PolicyError};

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One of the fixed behavior policies.
    Logging(LoggingPolicy),
    /// `softmax((x ⊗ e_a)ᵀ beta)`.
    Softmax(ParamVector),
    /// Deterministic argmax of the scores.
    Greedy(ParamVector),
}

impl Policy {
    /// Action distribution for `context`.
    pub fn probs(&self, context: &Context) -> Result<Vec<f64>, PolicyError> {
        match self {
            Policy::Logging(p) => p.probs(context),
            Policy::Softmax(beta) => Ok(features::softmax_policy(context, beta)?),
            Policy::Greedy(beta) => {
                let ActionId(a) = features::greedy_action(context, beta)?;
                let mut probs = vec![0.0; context.len()];
                probs[a] = 1.0;
                Ok(probs)
            }
        }
    }
}

impl From<LoggingPolicy> for Policy {
    fn from(p: LoggingPolicy) -> Self {
        Policy::Logging(p)
    }
}
