use std::collections::VecDeque;

use super::{dot, norm, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the largest gradient component is at or below this.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor per backtracking trial.
    pub shrink: f64,
    pub max_line_search: usize,
    /// Upper bound on the Euclidean length of a single step.
    pub max_step: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 100,
            grad_tol: 1e-10,
            armijo: 1e-4,
            shrink: 0.5,
            max_line_search: 20,
            max_step: f64::INFINITY,
        }
    }
}

impl LbfgsConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            max_iterations: iterations,
            ..Self::default()
        }
    }

    fn validate(&self) {
        assert!(self.memory >= 1, "memory must be at least 1");
        assert!(
            self.armijo > 0.0 && self.armijo < 1.0 && self.shrink > 0.0 && self.shrink < 1.0,
            "line-search constants must lie in (0, 1)"
        );
        assert!(self.max_step > 0.0, "max_step must be positive");
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Accepted steps.
    pub iterations: usize,
    /// Objective evaluations, including the initial one.
    pub evaluations: usize,
    pub converged: bool,
    /// The last line search found no acceptable step.
    pub line_search_failed: bool,
    /// Objective after each accepted step, starting with f(x0).
    pub history: Vec<f64>,
}

/// Minimizes `f` from `x0` with limited-memory BFGS.
///
/// Directions come from the two-loop recursion over the last `memory`
/// curvature pairs (pairs with `s.y <= 0` are dropped); step lengths from
/// backtracking on the Armijo condition. The first direction is the scaled
/// negative gradient with unit length. On line-search failure the memory is
/// cleared and steepest descent is tried once more before giving up; the
/// best point seen is returned either way.
pub fn minimize<O: Objective + ?Sized>(f: &mut O, x0: &[f64], cfg: &LbfgsConfig) -> LbfgsResult {
    cfg.validate();
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f.eval(&x, &mut g);
    let mut evaluations = 1;
    let mut history = vec![fx];

    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LbfgsResult {
            x,
            f: fx,
            iterations: 0,
            evaluations,
            converged: false,
            line_search_failed: true,
            history,
        };
    }

    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= cfg.grad_tol;
    let mut line_search_failed = false;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    while !converged && iterations < cfg.max_iterations {
        let mut d = direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // not a descent direction: fall back to steepest descent
            pairs.clear();
            d = direction(&g, &pairs);
            slope = dot(&g, &d);
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let dn = norm(&d);
            let mut step = if dn > cfg.max_step { cfg.max_step / dn } else { 1.0 };
            for _ in 0..cfg.max_line_search {
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                let f_new = f.eval(&x_new, &mut g_new);
                evaluations += 1;
                if f_new.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && f_new <= fx + cfg.armijo * step * slope
                {
                    accepted = Some(f_new);
                    break;
                }
                step *= cfg.shrink;
            }
            if accepted.is_some() || attempt == 1 || pairs.is_empty() {
                break;
            }
            pairs.clear();
            d = direction(&g, &pairs);
            slope = dot(&g, &d);
        }

        let Some(f_new) = accepted else {
            line_search_failed = true;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        iterations += 1;
        history.push(fx);
        converged = inf_norm(&g) <= cfg.grad_tol;
    }

    LbfgsResult {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
        line_search_failed,
        history,
    }
}

/// Two-loop recursion: returns `-H g`. With no pairs the result is the
/// negative gradient scaled to unit length.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    if pairs.is_empty() {
        let gn = norm(g);
        let scale = if gn > 0.0 { -1.0 / gn } else { 0.0 };
        q.iter_mut().for_each(|v| *v *= scale);
        return q;
    }
    let mut alpha = vec![0.0; pairs.len()];
    for (k, (s, y, rho)) in pairs.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alpha[k] = a;
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
    }
    let (s, y, _) = pairs.back().unwrap();
    let gamma = dot(s, y) / dot(y, y);
    q.iter_mut().for_each(|v| *v *= gamma);
    for (k, (s, y, rho)) in pairs.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha[k] - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_exact() {
        let target = [1.0, 2.0, 3.0];
        let mut f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..3 {
                let d = x[i] - target[i];
                g[i] = 2.0 * d;
                v += d * d;
            }
            v
        };
        let r = minimize(&mut f, &[0.0; 3], &LbfgsConfig::default());
        assert!(r.iterations <= 3, "{} iterations", r.iterations);
        for i in 0..3 {
            assert!((r.x[i] - target[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_objective() {
        let mut f = |_: &[f64], g: &mut [f64]| {
            g.iter_mut().for_each(|v| *v = 0.0);
            4.0
        };
        let r = minimize(&mut f, &[0.5, -1.0], &LbfgsConfig::default());
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![0.5, -1.0]);
    }

    #[test]
    fn history_is_monotone() {
        let mut f = |x: &[f64], g: &mut [f64]| {
            g[0] = 4.0 * x[0].powi(3);
            g[1] = 2.0 * (x[1] - 1.0);
            x[0].powi(4) + (x[1] - 1.0).powi(2)
        };
        let r = minimize(&mut f, &[2.0, -3.0], &LbfgsConfig::with_iterations(30));
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
