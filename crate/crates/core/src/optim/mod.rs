//! Unconstrained minimization over flat `f64` vectors.

mod gd;
mod lbfgs;

pub use gd::{gradient_descent, GdConfig, GdResult};
pub use lbfgs::{minimize, LbfgsConfig, LbfgsResult};

/// A differentiable scalar objective. `eval` writes the gradient into `grad`
/// (same length as `x`) and returns the value.
pub trait Objective {
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn eval(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
