//! Finite-difference and concavity checks for the four training objectives.

use banditfit_core::agents::{
    obj_grad_bayes_map, obj_grad_contextual_bandit, obj_grad_likelihood, obj_grad_reweighted,
    FitError, FitOptions, PriorSpec,
};
use banditfit_core::estimators::{ips_value, jensen_lower_bound};
use banditfit_core::{fit, ActionId, BanditEvent, Context, LogDataset, Method, ParamVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Objective = Box<dyn Fn(&[f64]) -> Result<(f64, Vec<f64>), FitError>>;

fn random_dataset(rng: &mut ChaCha8Rng, k: usize, n: usize) -> LogDataset {
    let events = (0..n)
        .map(|i| BanditEvent {
            user_id: i as u64,
            context: Context::new((0..k).map(|_| rng.random_range(0..4)).collect()),
            action: ActionId(rng.random_range(0..k)),
            click: i == 0 || rng.random::<f64>() < 0.3,
            propensity: rng.random_range(0.05..=1.0),
        })
        .collect();
    LogDataset::with_events(k, events)
}

fn random_beta(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn objectives(data: LogDataset, prior: PriorSpec) -> Vec<(&'static str, Objective)> {
    let opts = FitOptions::default();
    let d1 = data.clone();
    let d2 = data.clone();
    let d3 = data.clone();
    vec![
        (
            "likelihood",
            Box::new(move |b: &[f64]| obj_grad_likelihood(b, &d1)),
        ),
        (
            "reweighted",
            Box::new(move |b: &[f64]| obj_grad_reweighted(b, &d2, &opts)),
        ),
        (
            "cb",
            Box::new(move |b: &[f64]| obj_grad_contextual_bandit(b, &d3, &opts)),
        ),
        (
            "bayes-map",
            Box::new(move |b: &[f64]| obj_grad_bayes_map(b, &data, &prior)),
        ),
    ]
}

/// Largest per-coordinate relative error between the analytic gradient and
/// central differences with step `h`.
fn max_relative_fd_error(f: &Objective, beta: &[f64], h: f64) -> f64 {
    let (_, grad) = f(beta).unwrap();
    let mut worst: f64 = 0.0;
    let mut x = beta.to_vec();
    for i in 0..beta.len() {
        x[i] = beta[i] + h;
        let up = f(&x).unwrap().0;
        x[i] = beta[i] - h;
        let down = f(&x).unwrap().0;
        x[i] = beta[i];
        let fd = (up - down) / (2.0 * h);
        let scale = grad[i].abs().max(fd.abs());
        let err = if scale == 0.0 {
            0.0
        } else {
            (grad[i] - fd).abs() / scale
        };
        worst = worst.max(err);
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in [2usize, 3, 5] {
        for _ in 0..10 {
            let n = rng.random_range(1..=50);
            let data = random_dataset(&mut rng, k, n);
            let prior = PriorSpec::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(0.3..1.5),
                rng.random_range(0.0..1.0),
                k,
            )
            .unwrap();
            let beta = random_beta(&mut rng, k);
            for (name, f) in objectives(data, prior) {
                let err = max_relative_fd_error(&f, &beta, 1e-5);
                assert!(err < 1e-5, "{name} K={k} N={n}: relative error {err:e}");
            }
        }
    }
}

#[test]
fn objectives_are_concave() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in [2usize, 3, 5] {
        for _ in 0..20 {
            let n = rng.random_range(1..=30);
            let data = random_dataset(&mut rng, k, n);
            let prior = PriorSpec::new(-1.0, 0.5, 0.3, k).unwrap();
            let b1 = random_beta(&mut rng, k);
            let b2: Vec<f64> = random_beta(&mut rng, k).iter().map(|x| 3.0 * x).collect();
            let lambda: f64 = rng.random_range(0.01..0.99);
            let mid: Vec<f64> = b1
                .iter()
                .zip(&b2)
                .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                .collect();
            for (name, f) in objectives(data.clone(), prior) {
                let (f1, f2, fm) = (f(&b1).unwrap().0, f(&b2).unwrap().0, f(&mid).unwrap().0);
                assert!(
                    fm >= lambda * f1 + (1.0 - lambda) * f2 - 1e-9,
                    "{name}: f(mid) = {fm}, chord = {}",
                    lambda * f1 + (1.0 - lambda) * f2
                );
            }
        }
    }
}

#[test]
fn likelihood_is_stable_for_large_scores() {
    let data = LogDataset::with_events(
        2,
        vec![
            BanditEvent {
                user_id: 0,
                context: Context::new(vec![1, 0]),
                action: ActionId(0),
                click: true,
                propensity: 0.5,
            },
            BanditEvent {
                user_id: 1,
                context: Context::new(vec![1, 0]),
                action: ActionId(1),
                click: false,
                propensity: 0.5,
            },
        ],
    );
    for s in [-700.0, 700.0] {
        let (v, g) = obj_grad_likelihood(&[s, s, 0.0, 0.0], &data).unwrap();
        assert!(v.is_finite() && g.iter().all(|x| x.is_finite()));
        let (v, g) =
            obj_grad_contextual_bandit(&[s, -s, 0.0, 0.0], &data, &FitOptions::default()).unwrap();
        assert!(v.is_finite() && g.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn optimized_cb_bound_stays_below_ips_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in [2usize, 3, 5] {
        let data = random_dataset(&mut rng, k, 40);
        let res = fit(
            Method::ContextualBandit,
            &data,
            None,
            &FitOptions {
                max_iters: 200,
                ..FitOptions::default()
            },
        )
        .unwrap();
        let bound = jensen_lower_bound(&data, &res.beta).unwrap();
        let raw = data.len() as f64 * ips_value(&data, &res.beta).unwrap();
        assert!(
            bound.exp() <= raw * (1.0 + 1e-12),
            "K={k}: {} > {raw}",
            bound.exp()
        );
    }
}

#[test]
fn fits_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = random_dataset(&mut rng, 3, 50);
    let prior = PriorSpec::new(-1.0, 0.2, 0.1, 3).unwrap();
    for m in Method::ALL {
        let opts = FitOptions {
            max_iters: 300,
            ..FitOptions::default()
        };
        let a = fit(m, &data, Some(&prior), &opts).unwrap();
        let b = fit(m, &data, Some(&prior), &opts).unwrap();
        assert_eq!(a, b, "{m}");
    }
}

#[test]
fn map_on_data_improves_objective_from_prior_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let data = random_dataset(&mut rng, 5, 50);
    let prior = PriorSpec::recommended(5);
    let res = fit(
        Method::BayesMap,
        &data,
        Some(&prior),
        &FitOptions::default(),
    )
    .unwrap();
    assert!(res.converged);
    let start = obj_grad_bayes_map(ParamVector::filled(5, -6.0).as_slice(), &data, &prior)
        .unwrap()
        .0;
    assert!(res.final_objective >= start);
}
