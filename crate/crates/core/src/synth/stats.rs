use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::MotionSequence;

/// Smallest standard deviation used when scaling a feature.
pub const STD_EPSILON: f64 = 1e-8;

/// Per-feature mean and standard deviation of a corpus.
///
/// Models see `(x - mean) / std`; kinematics and guidance work on the raw
/// features, so everything crossing between the two goes through
/// [`NormStats::normalize`] / [`NormStats::denormalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Statistics over every frame of every sequence. Standard deviations
    /// below [`STD_EPSILON`] are raised to it.
    pub fn from_corpus(corpus: &[MotionSequence]) -> Result<Self> {
        let Some(first) = corpus.first() else {
            return Err(Error::InvalidArgument("cannot compute statistics of an empty corpus".into()));
        };
        let dim = first.dim();
        let mut count = 0usize;
        let mut mean = vec![0.0; dim];
        for m in corpus {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    what: "corpus feature dimension",
                    expected: dim,
                    got: m.dim(),
                });
            }
            for n in 0..m.frames() {
                for (acc, v) in mean.iter_mut().zip(m.row(n)) {
                    *acc += v;
                }
            }
            count += m.frames();
        }
        mean.iter_mut().for_each(|v| *v /= count as f64);
        // second pass for numerical stability
        let mut var = vec![0.0; dim];
        for m in corpus {
            for n in 0..m.frames() {
                for ((acc, v), mu) in var.iter_mut().zip(m.row(n)).zip(&mean) {
                    *acc += (v - mu) * (v - mu);
                }
            }
        }
        let std = var
            .into_iter()
            .map(|v| (v / count as f64).sqrt().max(STD_EPSILON))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, m: &MotionSequence) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "normalization feature dimension",
                expected: self.dim(),
                got: m.dim(),
            });
        }
        Ok(())
    }

    pub fn normalize(&self, m: &MotionSequence) -> Result<MotionSequence> {
        self.check(m)?;
        let mut out = m.clone();
        for n in 0..out.frames() {
            for ((v, mu), sd) in out.row_mut(n).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / sd;
            }
        }
        Ok(out)
    }

    pub fn denormalize(&self, m: &MotionSequence) -> Result<MotionSequence> {
        self.check(m)?;
        let mut out = m.clone();
        for n in 0..out.frames() {
            for ((v, mu), sd) in out.row_mut(n).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * sd + mu;
            }
        }
        Ok(out)
    }

    /// Denormalizes a flat row-major buffer in place.
    pub fn denormalize_slice(&self, data: &mut [f64]) {
        let d = self.dim();
        for (i, v) in data.iter_mut().enumerate() {
            *v = *v * self.std[i % d] + self.mean[i % d];
        }
    }

    /// Scales a gradient with respect to raw features into one with respect
    /// to normalized features.
    pub fn scale_gradient(&self, grad: &mut [f64]) {
        let d = self.dim();
        for (i, g) in grad.iter_mut().enumerate() {
            *g *= self.std[i % d];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_is_guarded() {
        let a = MotionSequence::new(2, 2, vec![1.0, 5.0, 3.0, 5.0]).unwrap();
        let s = NormStats::from_corpus(&[a.clone()]).unwrap();
        assert_eq!(s.std[1], STD_EPSILON);
        let n = s.normalize(&a).unwrap();
        assert!(n.is_finite());
        let back = s.denormalize(&n).unwrap();
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
