//! The cross-product feature map `x ⊗ e_a`, per-action scores, the softmax
//! policy and the greedy decision rule.
//!
//! The feature vector for (context, action) has `views[i]` at position
//! `i * K + action` and zeros elsewhere, so a score only touches one column
//! of `beta` viewed as a `K × K` matrix. Everything here uses that sparse
//! form; [`kron_features`] materializes the dense vector for tests and
//! callers that want it.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::domain::{ActionId, Context, ParamVector};
use crate::math;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("context has {context} items but parameters are for {params} items")]
pub struct DimensionMismatch {
    pub context: usize,
    pub params: usize,
}

/// Per-action scores `s_a = (x ⊗ e_a)ᵀ beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Dense `x ⊗ e_a` of length `K²`.
pub fn kron_features(context: &Context, action: ActionId) -> Vec<f64> {
    let k = context.len();
    let mut phi = vec![0.0; k * k];
    for (i, &v) in context.views().iter().enumerate() {
        phi[i * k + action.0] = f64::from(v);
    }
    phi
}

fn check(context: &Context, beta: &ParamVector) -> Result<(), DimensionMismatch> {
    if context.len() == beta.num_items() {
        Ok(())
    } else {
        Err(DimensionMismatch {
            context: context.len(),
            params: beta.num_items(),
        })
    }
}

/// Sparse score evaluation: `out[a] = Σ_i views[i] · beta[i·K + a]`.
/// Callers guarantee `views.len() * views.len() == beta.len() == ...`.
pub(crate) fn scores_into(views: &[u32], beta: &[f64], out: &mut [f64]) {
    let k = views.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &v) in views.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let v = f64::from(v);
        let row = &beta[i * k..(i + 1) * k];
        for (o, &b) in out.iter_mut().zip(row) {
            *o += v * b;
        }
    }
}

/// Score of a single action.
pub(crate) fn score_of(views: &[u32], beta: &[f64], action: usize) -> f64 {
    let k = views.len();
    views
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, &v)| f64::from(v) * beta[i * k + action])
        .sum()
}

pub fn scores(context: &Context, beta: &ParamVector) -> Result<ScoreVector, DimensionMismatch> {
    check(context, beta)?;
    let mut out = vec![0.0; context.len()];
    scores_into(context.views(), beta.as_slice(), &mut out);
    Ok(ScoreVector(out))
}

/// `argmax_a s_a`, lowest index on ties.
pub fn greedy_action(context: &Context, beta: &ParamVector) -> Result<ActionId, DimensionMismatch> {
    let s = scores(context, beta)?;
    Ok(ActionId(math::argmax(s.as_slice())))
}

/// `π_β(a|x) = softmax(s)_a`.
pub fn softmax_policy(
    context: &Context,
    beta: &ParamVector,
) -> Result<Vec<f64>, DimensionMismatch> {
    let s = scores(context, beta)?;
    let mut probs = vec![0.0; context.len()];
    math::softmax_into(s.as_slice(), &mut probs);
    Ok(probs)
}
