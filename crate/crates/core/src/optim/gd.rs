use super::Objective;

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub steps: usize,
    pub step_size: f64,
    /// Stop as soon as the objective is at or below this value.
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdResult {
    pub x: Vec<f64>,
    /// Objective at the returned point.
    pub f: f64,
    pub evaluations: usize,
    pub reached_target: bool,
}

/// Fixed-step first-order descent: `x <- x - step_size * grad f(x)`.
///
/// Runs `steps` updates and evaluates the final point; with a `target` it
/// stops at the first evaluation that reaches it.
pub fn gradient_descent<O: Objective + ?Sized>(f: &mut O, x0: &[f64], cfg: &GdConfig) -> GdResult {
    let mut x = x0.to_vec();
    let mut g = vec![0.0; x.len()];
    let mut evaluations = 0;
    let mut fx = f64::INFINITY;
    for k in 0..=cfg.steps {
        fx = f.eval(&x, &mut g);
        evaluations += 1;
        if cfg.target.is_some_and(|t| fx <= t) {
            return GdResult {
                x,
                f: fx,
                evaluations,
                reached_target: true,
            };
        }
        if k == cfg.steps || cfg.step_size == 0.0 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= cfg.step_size * gi;
        }
    }
    GdResult {
        x,
        f: fx,
        evaluations,
        reached_target: false,
    }
}
