//! Limited-memory BFGS ascent for smooth concave objectives.
//!
//! The line search works on the directional derivative
//! `φ'(t) = ∇f(β + t·d)·d`. For a concave `f`, `φ'` is non-increasing, so any
//! step with `φ'(t) ≥ 0` cannot decrease `f`. This keeps the iterates
//! monotone even when the change in `f` is below its rounding error, which
//! routinely happens near the optimum of objectives summed over thousands of
//! events. Computed objective values along the path are therefore
//! non-decreasing up to evaluation rounding.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{FitError, FitOptions, FitResult};
use crate::domain::ParamVector;

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const CURVATURE: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    crate::math::sqrt(dot(v, v))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn all_finite(value: f64, grad: &[f64]) -> bool {
    value.is_finite() && grad.iter().all(|g| g.is_finite())
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Ascent direction `H∇f` from the two-loop recursion. `y` pairs are stored
/// with the sign of `-∇f`, i.e. for the equivalent minimization.
fn direction(grad: &[f64], memory: &VecDeque<Pair>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for pair in memory.iter().rev() {
        let alpha = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    let gamma = match memory.back() {
        Some(last) => dot(&last.s, &last.y) / dot(&last.y, &last.y),
        None => 1.0 / inf_norm(grad).max(1.0),
    };
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for (pair, alpha) in memory.iter().zip(alphas.into_iter().rev()) {
        let beta = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (alpha - beta) * si;
        }
    }
    q
}

struct Point {
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

/// Step along `d` from `start`. Returns `None` when no acceptable step exists
/// within the evaluation budget.
fn line_search<F>(f: &mut F, start: &Point, d: &[f64]) -> Result<Option<Point>, FitError>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), FitError>,
{
    let slope0 = dot(&start.grad, d);
    debug_assert!(slope0 > 0.0);
    let mut lo = 0.0;
    let mut lo_slope = slope0;
    let mut lo_point: Option<Point> = None;
    let mut hi = f64::INFINITY;
    let mut hi_slope = 0.0;
    let mut t = 1.0;
    for _ in 0..MAX_LINE_SEARCH {
        let x: Vec<f64> = start.x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
        let (value, grad) = f(&x)?;
        if !all_finite(value, &grad) {
            hi = t;
            hi_slope = f64::NEG_INFINITY;
            t = 0.5 * (lo + hi);
            continue;
        }
        let slope = dot(&grad, d);
        let point = Point { x, value, grad };
        let armijo = value >= start.value + ARMIJO * t * slope0;
        if slope >= 0.0 {
            // Still ascending at t, so f(t) >= f(0) in exact arithmetic.
            if slope <= CURVATURE * slope0 {
                return Ok(Some(point));
            }
            lo = t;
            lo_slope = slope;
            lo_point = Some(point);
            t = if hi.is_finite() {
                interpolate(lo, lo_slope, hi, hi_slope)
            } else {
                2.0 * t
            };
        } else {
            if armijo && -slope <= CURVATURE * slope0 {
                return Ok(Some(point));
            }
            hi = t;
            hi_slope = slope;
            t = interpolate(lo, lo_slope, hi, hi_slope);
        }
        if hi.is_finite() && hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(lo_point)
}

/// Secant root of the directional derivative inside `(lo, hi)`, kept away
/// from the endpoints.
fn interpolate(lo: f64, lo_slope: f64, hi: f64, hi_slope: f64) -> f64 {
    let width = hi - lo;
    let t = if hi_slope.is_finite() && lo_slope > hi_slope {
        lo + width * lo_slope / (lo_slope - hi_slope)
    } else {
        lo + 0.5 * width
    };
    t.clamp(lo + 0.1 * width, hi - 0.1 * width)
}

/// Maximizes a concave differentiable objective starting from `beta0`.
///
/// Stops when the gradient infinity-norm reaches `opts.grad_tol`, after
/// `opts.max_iters` accepted steps, or when the line search can make no
/// further progress. Only the last two report `converged = false`.
pub fn optimize<F>(
    mut objective: F,
    beta0: ParamVector,
    opts: &FitOptions,
) -> Result<FitResult, FitError>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), FitError>,
{
    opts.validate()?;
    let num_items = beta0.num_items();
    let x0 = beta0.into_vec();
    let (value, grad) = objective(&x0)?;
    if !all_finite(value, &grad) {
        return Err(FitError::NonFinite { iteration: 0 });
    }
    let mut current = Point { x: x0, value, grad };
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(MEMORY);
    let mut trace = alloc::vec![current.value];
    let mut iterations = 0;
    while iterations < opts.max_iters && inf_norm(&current.grad) > opts.grad_tol {
        let mut d = direction(&current.grad, &memory);
        if !(dot(&d, &current.grad) > 0.0) {
            memory.clear();
            d = direction(&current.grad, &memory);
        }
        let next = match line_search(&mut objective, &current, &d)? {
            Some(p) => p,
            None if !memory.is_empty() => {
                // Retry once along the scaled gradient before giving up.
                memory.clear();
                let d = direction(&current.grad, &memory);
                match line_search(&mut objective, &current, &d)? {
                    Some(p) => p,
                    None => break,
                }
            }
            None => break,
        };
        iterations += 1;
        if !all_finite(next.value, &next.grad) {
            return Err(FitError::NonFinite {
                iteration: iterations,
            });
        }
        let s: Vec<f64> = next.x.iter().zip(&current.x).map(|(a, b)| a - b).collect();
        // Minimization convention: y = ∇(-f)(next) - ∇(-f)(current).
        let y: Vec<f64> = current
            .grad
            .iter()
            .zip(&next.grad)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        current = next;
        trace.push(current.value);
    }
    let grad_norm = inf_norm(&current.grad);
    Ok(FitResult {
        beta: ParamVector::from_vec(num_items, current.x).map_err(|_| FitError::NonFinite {
            iteration: iterations,
        })?,
        final_objective: current.value,
        final_grad_norm: grad_norm,
        iterations,
        converged: grad_norm <= opts.grad_tol,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quadratic(target: Vec<f64>) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>), FitError> {
        move |x: &[f64]| {
            let grad: Vec<f64> = target.iter().zip(x).map(|(t, xi)| t - xi).collect();
            let value = -0.5 * grad.iter().map(|g| g * g).sum::<f64>();
            Ok((value, grad))
        }
    }

    #[test]
    fn quadratic_converges_to_target() {
        let target: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) * 1.7).collect();
        let res = optimize(
            quadratic(target.clone()),
            ParamVector::zeros(3),
            &FitOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        for (b, t) in res.beta.as_slice().iter().zip(&target) {
            assert!((b - t).abs() < 1e-6);
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        // f = -½ Σ c_i (x_i - 1)² with curvatures spanning six decades.
        let curv: Vec<f64> = (0..16)
            .map(|i| libm::pow(10.0, i as f64 * 0.4 - 2.0))
            .collect();
        let f = move |x: &[f64]| {
            let grad: Vec<f64> = x.iter().zip(&curv).map(|(xi, c)| -c * (xi - 1.0)).collect();
            let value = -0.5
                * x.iter()
                    .zip(&curv)
                    .map(|(xi, c)| c * (xi - 1.0) * (xi - 1.0))
                    .sum::<f64>();
            Ok((value, grad))
        };
        let res = optimize(f, ParamVector::zeros(4), &FitOptions::default()).unwrap();
        assert!(res.converged, "{res:?}");
        assert!(res
            .objective_trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0)));
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &[f64]| Ok((f64::NAN, vec![0.0; 4]));
        assert_eq!(
            optimize(f, ParamVector::zeros(2), &FitOptions::default()).unwrap_err(),
            FitError::NonFinite { iteration: 0 }
        );
    }

    #[test]
    fn deterministic() {
        let target: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let a = optimize(
            quadratic(target.clone()),
            ParamVector::zeros(2),
            &FitOptions::default(),
        )
        .unwrap();
        let b = optimize(
            quadratic(target),
            ParamVector::zeros(2),
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
