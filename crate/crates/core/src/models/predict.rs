use candle_core::Tensor;

use super::checkpoint::Checkpoint;
use super::condition::build_condition;
use super::network::{batch_tensor, unbatch};
use crate::diffusion::X0Predictor;
use crate::error::{Error, Result};
use crate::guidance::SpatialCondition;
use crate::motion::{MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;

/// Spatial conditions for the ControlNet at each step.
pub trait ConditionSource {
    /// One entry per sequence; `None` runs the denoiser alone.
    fn conditions(&mut self, x_t: &[MotionSequence], t: usize) -> Result<Vec<Option<(SpatialCondition, RootOrigin)>>>;
}

/// The same conditions at every step. Empty conditions are skipped.
pub struct FixedConditions(pub Vec<Option<(SpatialCondition, RootOrigin)>>);

impl ConditionSource for FixedConditions {
    fn conditions(&mut self, _: &[MotionSequence], _: usize) -> Result<Vec<Option<(SpatialCondition, RootOrigin)>>> {
        Ok(self
            .0
            .iter()
            .map(|c| c.as_ref().filter(|(cond, _)| !cond.is_empty()).cloned())
            .collect())
    }
}

/// Denoiser (plus ControlNet when conditions are present) as an x0
/// predictor. Sequences are evaluated one at a time, so each result does not
/// depend on what else is in the batch.
pub struct ModelPredictor<'a, C> {
    pub checkpoint: &'a Checkpoint,
    pub skeleton: &'a Skeleton,
    pub prompts: Vec<u32>,
    /// Classifier-free guidance weight; 1 uses the conditional pass only.
    pub cfg_weight: f64,
    pub source: C,
}

impl<C: ConditionSource> X0Predictor for ModelPredictor<'_, C> {
    fn predict(&mut self, x_t: &[MotionSequence], t: usize) -> Result<Vec<MotionSequence>> {
        if x_t.len() != self.prompts.len() {
            return Err(Error::DimensionMismatch {
                what: "prompt count",
                expected: x_t.len(),
                got: self.prompts.len(),
            });
        }
        let ckpt = self.checkpoint;
        let device = ckpt.denoiser.store().device().clone();
        let conds = self.source.conditions(x_t, t)?;
        let mut out = Vec::with_capacity(x_t.len());
        for (i, x) in x_t.iter().enumerate() {
            let xt = batch_tensor(std::slice::from_ref(x), &device)?;
            let prompt = self.prompts[i];
            let feats = match (&ckpt.controlnet, &conds[i]) {
                (Some(net), Some((cond, origin))) => {
                    let raw = ckpt.manifest.stats.denormalize(x)?;
                    let c: Vec<f32> = build_condition(&raw, cond, self.skeleton, *origin)?
                        .into_iter()
                        .map(|v| v as f32)
                        .collect();
                    let c = Tensor::from_vec(c, (1, x.frames(), net.config.condition_dim()), &device)?;
                    Some(net.forward(&xt, &[t], &[prompt], &c)?)
                }
                _ => None,
            };
            let cond_pred = ckpt.denoiser.forward(&xt, &[t], &[prompt], feats.as_deref())?;
            let pred = if self.cfg_weight != 1.0 && prompt != 0 {
                let uncond = ckpt.denoiser.forward(&xt, &[t], &[0], feats.as_deref())?;
                (&uncond + ((cond_pred - &uncond)? * self.cfg_weight)?)?
            } else {
                cond_pred
            };
            out.extend(unbatch(&pred)?);
        }
        Ok(out)
    }
}
