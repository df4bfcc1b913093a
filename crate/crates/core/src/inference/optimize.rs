//! Limited-memory BFGS maximization with a monotone backtracking line search.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct OptimConfig {
    pub max_iters: usize,
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step improves the objective by less than
    /// `value_tol * (1 + |f|)`.
    pub value_tol: f64,
    pub memory: usize,
    pub max_backtracks: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            value_tol: 1e-14,
            memory: 10,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes `f`, which returns the value and gradient. Accepted steps never
/// decrease the objective; non-finite trial points are treated as failed
/// steps and backtracked from.
pub fn maximize<F>(mut f: F, x0: &[f64], cfg: &OptimConfig) -> Result<FitResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![fx];
    // Curvature pairs for the negated objective.
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = inf_norm(&g) < cfg.grad_tol;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        // Two-loop recursion on the descent gradient -g.
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &q);
            q.iter_mut().zip(&y_hist[i]).for_each(|(qj, yj)| *qj -= alpha[i] * yj);
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0 / inf_norm(&g).max(1.0)
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            q.iter_mut().zip(&s_hist[i]).for_each(|(qj, sj)| *qj += (alpha[i] - beta) * sj);
        }
        // Ascent direction d = -q.
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            s_hist.clear();
            y_hist.clear();
            let scale = 1.0 / inf_norm(&g).max(1.0);
            d = g.iter().map(|v| v * scale).collect();
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let trial = f(&xt);
            evaluations += 1;
            if let Ok((ft, gt)) = trial {
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft >= fx + 1e-4 * step * slope {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            // No ascent possible along the best direction: stationary to
            // working precision.
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == cfg.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        let gain = fn_ - fx;
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        converged = inf_norm(&g) < cfg.grad_tol || gain <= cfg.value_tol * (1.0 + fx.abs());
    }
    Ok(FitResult {
        x,
        value: fx,
        grad: g,
        trace,
        iterations,
        evaluations,
        converged,
    })
}

/// Maximizes in log space: `f` receives and differentiates with respect to
/// log-parameters, so positivity of `exp(x)` is automatic.
pub fn fit_mle<F>(f: F, log_params0: &[f64], cfg: &OptimConfig) -> Result<FitResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    maximize(f, log_params0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_optimum() {
        let c = [1.0, -2.0, 0.5];
        let w = [1.0, 10.0, 100.0];
        let f = |x: &[f64]| {
            let v = -x.iter().zip(&c).zip(&w).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>();
            let g = x.iter().zip(&c).zip(&w).map(|((a, b), w)| -2.0 * w * (a - b)).collect();
            Ok((v, g))
        };
        let r = maximize(f, &[0.0; 3], &OptimConfig::default()).unwrap();
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rosenbrock_is_monotone() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = -((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2));
            let g = vec![2.0 * (1.0 - a) + 400.0 * a * (b - a * a), -200.0 * (b - a * a)];
            Ok((v, g))
        };
        let r = maximize(f, &[-1.2, 1.0], &OptimConfig::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = maximize(|_| Ok((f64::NAN, vec![0.0])), &[0.0], &OptimConfig::default());
        assert_eq!(r.unwrap_err(), Error::NonFiniteObjective);
    }
}
