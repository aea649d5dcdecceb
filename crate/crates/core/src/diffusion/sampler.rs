use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::motion::MotionSequence;

/// Predicts clean motion from a batch of noisy motions at step `t`.
pub trait X0Predictor {
    fn predict(&mut self, x_t: &[MotionSequence], t: usize) -> Result<Vec<MotionSequence>>;
}

impl<F> X0Predictor for F
where
    F: FnMut(&[MotionSequence], usize) -> Result<Vec<MotionSequence>>,
{
    fn predict(&mut self, x_t: &[MotionSequence], t: usize) -> Result<Vec<MotionSequence>> {
        self(x_t, t)
    }
}

/// Which sampler quantity a guidance call may modify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// The clean prediction, right after the predictor. At `t = 0` this is
    /// also the returned sample.
    CleanPrediction,
    /// The posterior mean, `t >= 1` only.
    PosteriorMean,
}

/// Hook that edits the batch in place during sampling.
pub trait GuidanceHook {
    fn guide(&mut self, stage: Stage, batch: &mut [MotionSequence], t: usize) -> Result<()>;
}

/// Hook that leaves every batch untouched.
pub struct NoGuidance;

impl GuidanceHook for NoGuidance {
    fn guide(&mut self, _: Stage, _: &mut [MotionSequence], _: usize) -> Result<()> {
        Ok(())
    }
}

/// Per-sequence standard normal stream.
pub struct NoiseSource {
    rngs: Vec<ChaCha8Rng>,
}

impl NoiseSource {
    pub fn new(seeds: &[u64]) -> Self {
        Self {
            rngs: seeds.iter().map(|s| ChaCha8Rng::seed_from_u64(*s)).collect(),
        }
    }

    pub fn fill(&mut self, index: usize, out: &mut [f64]) {
        let rng = &mut self.rngs[index];
        for v in out {
            *v = StandardNormal.sample(rng);
        }
    }
}

/// Ancestral sampling from `x_T ~ N(0, I)`.
///
/// Per step: predict `x0_hat`, let the hook edit it, form the posterior mean
/// (for `t >= 1`), let the hook edit that, and draw
/// `x_{t-1} ~ N(mu_t, var_t I)`. At `t = 0` the (guided) clean prediction is
/// returned without noise. Sequence `i` draws all of its noise, `x_T` first,
/// from its own generator seeded with `seeds[i]`, so results do not depend on
/// batch composition.
pub fn sample<P, H>(
    predictor: &mut P,
    hook: &mut H,
    sched: &NoiseSchedule,
    frames: usize,
    dim: usize,
    seeds: &[u64],
) -> Result<Vec<MotionSequence>>
where
    P: X0Predictor + ?Sized,
    H: GuidanceHook + ?Sized,
{
    let mut noise = NoiseSource::new(seeds);
    let mut x: Vec<MotionSequence> = (0..seeds.len())
        .map(|i| {
            let mut m = MotionSequence::zeros(frames, dim);
            noise.fill(i, m.as_mut_slice());
            m
        })
        .collect();

    for t in (0..sched.steps()).rev() {
        let mut x0 = predictor.predict(&x, t)?;
        if x0.len() != x.len() || x0.iter().any(|m| !m.same_shape(&x[0])) {
            return Err(Error::DimensionMismatch {
                what: "predictor output batch",
                expected: x.len(),
                got: x0.len(),
            });
        }
        hook.guide(Stage::CleanPrediction, &mut x0, t)?;
        if t == 0 {
            if x0.iter().any(|m| !m.is_finite()) {
                return Err(Error::NonFinite { step: t });
            }
            return Ok(x0);
        }

        let (c0, ct) = sched.posterior_coefficients(t);
        let mut mu: Vec<MotionSequence> = x0
            .iter()
            .zip(&x)
            .map(|(a, b)| {
                let data = a
                    .as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(p, q)| c0 * p + ct * q)
                    .collect();
                MotionSequence::new(frames, dim, data).expect("shapes checked")
            })
            .collect();
        hook.guide(Stage::PosteriorMean, &mut mu, t)?;

        let sigma = sched.posterior_variance(t).sqrt();
        let mut eps = vec![0.0; frames * dim];
        for (i, m) in mu.iter_mut().enumerate() {
            noise.fill(i, &mut eps);
            for (v, e) in m.as_mut_slice().iter_mut().zip(&eps) {
                *v += sigma * e;
            }
            if !m.is_finite() {
                return Err(Error::NonFinite { step: t });
            }
        }
        x = mu;
    }
    unreachable!("schedule has at least one step")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_returns_prediction() {
        let sched = NoiseSchedule::cosine(1);
        let target = MotionSequence::new(1, 2, vec![0.5, -0.5]).unwrap();
        let mut pred = |x: &[MotionSequence], _t: usize| Ok(vec![target.clone(); x.len()]);
        let out = sample(&mut pred, &mut NoGuidance, &sched, 1, 2, &[3, 4]).unwrap();
        assert_eq!(out, vec![target.clone(), target]);
    }

    #[test]
    fn non_finite_aborts_with_step() {
        let sched = NoiseSchedule::cosine(5);
        let mut pred = |x: &[MotionSequence], t: usize| {
            let v = if t == 3 { f64::NAN } else { 0.0 };
            Ok(vec![MotionSequence::new(1, 1, vec![v]).unwrap(); x.len()])
        };
        let err = sample(&mut pred, &mut NoGuidance, &sched, 1, 1, &[0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 3 }));
    }
}
