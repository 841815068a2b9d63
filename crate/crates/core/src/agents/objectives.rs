//! Log-objectives and their gradients. All four are concave in `beta` and
//! are maximized by [`super::optimize`].

use alloc::vec;
use alloc::vec::Vec;

use super::{FitError, FitOptions, PriorSpec};
use crate::domain::{BanditEvent, LogDataset};
use crate::features::{score_of, scores_into};
use crate::math;

/// Objective value and gradient.
pub type ObjGrad = (f64, Vec<f64>);

fn check_beta(beta: &[f64], data: &LogDataset) -> Result<usize, FitError> {
    let k = data.num_items;
    if beta.len() != k * k {
        return Err(FitError::Dimension {
            expected: k * k,
            found: beta.len(),
        });
    }
    Ok(k)
}

fn ips_weight(event: &BanditEvent, cap: Option<f64>) -> f64 {
    let w = event.weight();
    match cap {
        Some(cap) => w.min(cap),
        None => w,
    }
}

/// Weighted Bernoulli log-likelihood; `weight(event)` scales each term.
fn weighted_likelihood(
    beta: &[f64],
    data: &LogDataset,
    weight: impl Fn(&BanditEvent) -> f64,
) -> Result<ObjGrad, FitError> {
    let k = check_beta(beta, data)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; k * k];
    for event in &data.events {
        let views = event.context.views();
        let a = event.action.0;
        let w = weight(event);
        let s = score_of(views, beta, a);
        let ll = if event.click {
            math::log_sigmoid(s)
        } else {
            math::log_one_minus_sigmoid(s)
        };
        value += w * ll;
        let residual = w * (event.click_f64() - math::sigmoid(s));
        for (i, &v) in views.iter().enumerate() {
            if v != 0 {
                grad[i * k + a] += residual * f64::from(v);
            }
        }
    }
    Ok((value, grad))
}

/// `Σ_n c_n log σ(s_n) + (1 - c_n) log(1 - σ(s_n))`.
pub fn obj_grad_likelihood(beta: &[f64], data: &LogDataset) -> Result<ObjGrad, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    weighted_likelihood(beta, data, |_| 1.0)
}

/// The likelihood with each term multiplied by `w_n = 1/propensity_n`,
/// capped at `opts.weight_cap` when set.
pub fn obj_grad_reweighted(
    beta: &[f64],
    data: &LogDataset,
    opts: &FitOptions,
) -> Result<ObjGrad, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyData);
    }
    let cap = opts.weight_cap;
    weighted_likelihood(beta, data, |e| ips_weight(e, cap))
}

/// Weighted multiclass log-likelihood of the clicked actions under the
/// softmax policy: `Σ_n w_n c_n log π_β(a_n | x_n)`.
pub fn obj_grad_contextual_bandit(
    beta: &[f64],
    data: &LogDataset,
    opts: &FitOptions,
) -> Result<ObjGrad, FitError> {
    let k = check_beta(beta, data)?;
    if data.events.iter().all(|e| !e.click) {
        return Err(FitError::NoClicks);
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; k * k];
    let mut scores = vec![0.0; k];
    let mut probs = vec![0.0; k];
    for event in data.events.iter().filter(|e| e.click) {
        let views = event.context.views();
        let a = event.action.0;
        let w = ips_weight(event, opts.weight_cap);
        scores_into(views, beta, &mut scores);
        value += w * (scores[a] - math::log_sum_exp(&scores));
        math::softmax_into(&scores, &mut probs);
        for (i, &v) in views.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let wv = w * f64::from(v);
            let row = &mut grad[i * k..(i + 1) * k];
            for (g, &p) in row.iter_mut().zip(&probs) {
                *g -= wv * p;
            }
            row[a] += wv;
        }
    }
    Ok((value, grad))
}

/// Log-likelihood plus the Gaussian log-prior (up to a constant):
/// `ℓ(β) - ½(β - μ1)ᵀ Σ⁻¹ (β - μ1)`. Defined for empty data.
pub fn obj_grad_bayes_map(
    beta: &[f64],
    data: &LogDataset,
    prior: &PriorSpec,
) -> Result<ObjGrad, FitError> {
    check_beta(beta, data)?;
    if prior.num_items != data.num_items {
        return Err(FitError::Dimension {
            expected: data.num_items,
            found: prior.num_items,
        });
    }
    let (mut value, mut grad) = weighted_likelihood(beta, data, |_| 1.0)?;
    let (quad, prec) = prior.mahalanobis(beta)?;
    value -= 0.5 * quad;
    for (g, p) in grad.iter_mut().zip(&prec) {
        *g -= p;
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionId, Context};

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
    fn likelihood_at_zero() {
        let data = LogDataset::with_events(
            2,
            vec![
                event(&[1, 2], 0, true, 0.5),
                event(&[0, 1], 1, false, 0.5),
                event(&[3, 0], 1, false, 0.5),
            ],
        );
        let (v, _) = obj_grad_likelihood(&[0.0; 4], &data).unwrap();
        assert!((v - 3.0 * math::log(0.5)).abs() < 1e-14);
        assert_eq!(
            obj_grad_likelihood(&[0.0; 4], &LogDataset::new(2)),
            Err(FitError::EmptyData)
        );
    }

    #[test]
    fn balanced_pair_has_zero_gradient_only_at_zero_score() {
        let data = LogDataset::with_events(
            2,
            vec![event(&[1, 0], 0, true, 1.0), event(&[1, 0], 0, false, 1.0)],
        );
        let (_, g) = obj_grad_likelihood(&[0.0; 4], &data).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        let (_, g) = obj_grad_likelihood(&[0.5, 0.0, 0.0, 0.0], &data).unwrap();
        assert!(g[0] < 0.0);
    }

    #[test]
    fn unit_propensities_reduce_to_likelihood() {
        let data = LogDataset::with_events(
            3,
            vec![
                event(&[1, 2, 0], 2, true, 1.0),
                event(&[0, 1, 4], 0, false, 1.0),
            ],
        );
        let beta: Vec<f64> = (0..9).map(|x| 0.1 * x as f64 - 0.3).collect();
        let opts = FitOptions::default();
        assert_eq!(
            obj_grad_reweighted(&beta, &data, &opts).unwrap(),
            obj_grad_likelihood(&beta, &data).unwrap()
        );
    }

    #[test]
    fn single_event_weight_scales_objective() {
        let data = LogDataset::with_events(2, vec![event(&[2, 1], 1, true, 0.25)]);
        let beta = [0.2, -0.4, 0.1, 0.3];
        let (lw, gw) = obj_grad_reweighted(&beta, &data, &FitOptions::default()).unwrap();
        let (l, g) = obj_grad_likelihood(&beta, &data).unwrap();
        assert!((lw - 4.0 * l).abs() < 1e-14);
        for (x, y) in gw.iter().zip(&g) {
            assert!((x - 4.0 * y).abs() < 1e-14);
        }
        let capped = FitOptions {
            weight_cap: Some(2.0),
            ..FitOptions::default()
        };
        let (lc, _) = obj_grad_reweighted(&beta, &data, &capped).unwrap();
        assert!((lc - 2.0 * l).abs() < 1e-14);
    }

    #[test]
    fn contextual_bandit_small_cases() {
        let data = LogDataset::with_events(
            3,
            vec![
                event(&[1, 0, 2], 0, true, 0.5),
                event(&[0, 1, 1], 2, true, 0.25),
                event(&[4, 1, 0], 1, false, 0.1),
            ],
        );
        let (v, _) = obj_grad_contextual_bandit(&[0.0; 9], &data, &FitOptions::default()).unwrap();
        assert!((v - 6.0 * math::log(1.0 / 3.0)).abs() < 1e-13);

        let one = LogDataset::with_events(2, vec![event(&[0, 0], 1, true, 0.5)]);
        let (v, g) = obj_grad_contextual_bandit(&[0.0; 4], &one, &FitOptions::default()).unwrap();
        assert!((v - 2.0 * math::log(0.5)).abs() < 1e-15);
        assert!(g.iter().all(|&x| x == 0.0));

        let none = LogDataset::with_events(2, vec![event(&[1, 0], 1, false, 0.5)]);
        let err = obj_grad_contextual_bandit(&[0.0; 4], &none, &FitOptions::default()).unwrap_err();
        assert_eq!(err, FitError::NoClicks);
        assert_eq!(
            alloc::format!("{err}"),
            "objective constant in beta: no clicked events"
        );
    }

    #[test]
    fn map_on_empty_data_peaks_at_prior_mean() {
        let prior = PriorSpec::recommended(3);
        let data = LogDataset::new(3);
        let (v, g) = obj_grad_bayes_map(&[-6.0; 9], &data, &prior).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
        let (v2, _) = obj_grad_bayes_map(&[-5.9; 9], &data, &prior).unwrap();
        assert!(v2 < 0.0);
    }
}
