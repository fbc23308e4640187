//! Limited-memory quasi-Newton minimizer with a backtracking Armijo line
//! search. The objective here is convex (regularized CRF negative
//! log-likelihood), so Armijo backtracking is sufficient and keeps the
//! accepted objective sequence non-increasing.

use std::collections::VecDeque;

/// A differentiable objective. `value` exists separately so line-search
/// trial points can skip the gradient computation.
pub trait Objective {
    fn value(&mut self, x: &[f64]) -> f64;
    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>);
}

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    /// Number of (s, y) correction pairs kept.
    pub history: usize,
    pub max_iterations: usize,
    /// Relative objective change below which iteration stops.
    pub tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Maximum step halvings per line search.
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history: 10,
            max_iterations: 200,
            tolerance: 1e-6,
            armijo_c: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    GradientVanished,
}

/// Per-iteration diagnostics handed to the progress callback.
#[derive(Debug, Clone, Copy)]
pub struct IterationInfo {
    /// 1-based iteration number.
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub step_size: f64,
    /// Objective evaluations spent in this iteration's line search.
    pub evaluations: usize,
}

struct Correction {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub reason: TerminationReason,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two-loop recursion: applies the implicit inverse-Hessian approximation
/// to the gradient, yielding the (negated later) search direction.
fn apply_inverse_hessian(history: &VecDeque<Correction>, gradient: &[f64]) -> Vec<f64> {
    let mut q = gradient.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for c in history.iter().rev() {
        let alpha = c.rho * dot(&c.s, &q);
        for (qi, yi) in q.iter_mut().zip(&c.y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some(last) = history.back() {
        // Initial Hessian scaling from the most recent pair.
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (c, &alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = c.rho * dot(&c.y, &q);
        for (qi, si) in q.iter_mut().zip(&c.s) {
            *qi += (alpha - beta) * si;
        }
    }
    q
}

/// Minimizes the objective starting at `x0`.
///
/// The callback fires once per accepted iteration with the diagnostics and
/// the new iterate, and may compute whatever it likes (e.g. dev-set F1).
pub fn minimize<O: Objective>(
    objective: &mut O,
    x0: Vec<f64>,
    config: &LbfgsConfig,
    mut on_iteration: impl FnMut(&IterationInfo, &[f64]),
) -> MinimizeResult {
    let mut x = x0;
    let (mut fx, mut grad) = objective.value_grad(&x);
    let mut history: VecDeque<Correction> = VecDeque::with_capacity(config.history);

    for iteration in 1..=config.max_iterations {
        let grad_norm = norm(&grad);
        if grad_norm < 1e-10 {
            return MinimizeResult {
                x,
                objective: fx,
                reason: TerminationReason::GradientVanished,
                iterations: iteration - 1,
            };
        }

        let mut direction = apply_inverse_hessian(&history, &grad);
        for d in direction.iter_mut() {
            *d = -*d;
        }
        let mut descent = dot(&grad, &direction);
        if descent >= 0.0 {
            // Curvature information went stale; fall back to steepest descent.
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            descent = -grad_norm * grad_norm;
        }

        // Backtracking Armijo search. Start conservatively on the very
        // first iteration, where no curvature scaling exists yet.
        let mut step = if history.is_empty() { (1.0 / grad_norm).min(1.0) } else { 1.0 };
        let mut evaluations = 0;
        let mut accepted = None;
        let mut trial = vec![0.0; x.len()];
        for _ in 0..=config.max_backtracks {
            for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&direction) {
                *t = xi + step * di;
            }
            let f_trial = objective.value(&trial);
            evaluations += 1;
            if f_trial.is_finite() && f_trial <= fx + config.armijo_c * step * descent {
                accepted = Some(f_trial);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            return MinimizeResult {
                x,
                objective: fx,
                reason: TerminationReason::LineSearchFailed,
                iterations: iteration - 1,
            };
        };

        let (f_check, grad_new) = objective.value_grad(&trial);
        debug_assert!((f_check - f_new).abs() <= 1e-9 * (1.0 + f_new.abs()));

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if history.len() == config.history {
                history.pop_front();
            }
            history.push_back(Correction { rho: 1.0 / sy, s, y });
        }

        let rel_change = (fx - f_new).abs() / fx.abs().max(1.0);
        x = trial;
        fx = f_new;
        grad = grad_new;

        on_iteration(
            &IterationInfo {
                iteration,
                objective: fx,
                gradient_norm: norm(&grad),
                step_size: step,
                evaluations,
            },
            &x,
        );

        if rel_change < config.tolerance {
            return MinimizeResult {
                x,
                objective: fx,
                reason: TerminationReason::Converged,
                iterations: iteration,
            };
        }
    }
    MinimizeResult {
        x,
        objective: fx,
        reason: TerminationReason::MaxIterations,
        iterations: config.max_iterations,
    }
}
