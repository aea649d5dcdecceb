//! Single-agent controlled generation: ControlNet features plus IK guidance
//! inside the reverse sampler.

use serde::{Deserialize, Serialize};

use crate::diffusion::{sample, NoGuidance};
use crate::error::{Error, Result};
use crate::guidance::{GuidanceConfig, GuidanceProblem, GuidanceTrace, IkGuidance, SpatialCondition};
use crate::models::{Checkpoint, FixedConditions, ModelPredictor};
use crate::motion::{forward_kinematics_from, GlobalPose, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateOptions {
    /// `None` disables IK guidance.
    pub guidance: Option<GuidanceConfig>,
    pub use_controlnet: bool,
    pub cfg_weight: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            guidance: Some(GuidanceConfig::default()),
            use_controlnet: true,
            cfg_weight: 1.0,
        }
    }
}

impl GenerateOptions {
    pub fn unguided() -> Self {
        Self {
            guidance: None,
            use_controlnet: false,
            cfg_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.guidance {
            g.validate()?;
        }
        if !self.cfg_weight.is_finite() {
            return Err(Error::InvalidArgument("cfg weight must be finite".into()));
        }
        Ok(())
    }
}

/// One request per sample: prompt class, spatial targets (world frame, root
/// starting at the origin facing +Z) and the noise seed. The condition's
/// frame count sets the generated length.
#[derive(Debug, Clone)]
pub struct SampleRequest {
    pub prompt: u32,
    pub condition: SpatialCondition,
    pub seed: u64,
}

pub struct Generated {
    /// Raw (denormalized) motions.
    pub motions: Vec<MotionSequence>,
    pub poses: Vec<GlobalPose>,
    pub trace: GuidanceTrace,
}

/// Samples every request in one batch. Each sequence is computed
/// independently of the others, so splitting a batch does not change any
/// result.
pub fn generate(ckpt: &Checkpoint, skel: &Skeleton, requests: &[SampleRequest], opts: &GenerateOptions) -> Result<Generated> {
    opts.validate()?;
    let Some(first) = requests.first() else {
        return Ok(Generated {
            motions: Vec::new(),
            poses: Vec::new(),
            trace: GuidanceTrace::default(),
        });
    };
    let frames = first.condition.frames();
    let dim = ckpt.manifest.config.dim;
    for r in requests {
        if r.condition.frames() != frames || r.condition.joints() != skel.joint_count() {
            return Err(Error::DimensionMismatch {
                what: "condition size",
                expected: frames * skel.joint_count(),
                got: r.condition.frames() * r.condition.joints(),
            });
        }
    }
    if frames != ckpt.manifest.frames {
        log::warn!("sampling {frames} frames; the checkpoint was trained on {}", ckpt.manifest.frames);
    }
    let origin = RootOrigin::default();
    let stats = &ckpt.manifest.stats;
    let conds = requests
        .iter()
        .map(|r| opts.use_controlnet.then(|| (r.condition.clone(), origin)))
        .collect();
    let mut predictor = ModelPredictor {
        checkpoint: ckpt,
        skeleton: skel,
        prompts: requests.iter().map(|r| r.prompt).collect(),
        cfg_weight: opts.cfg_weight,
        source: FixedConditions(conds),
    };
    let seeds: Vec<u64> = requests.iter().map(|r| r.seed).collect();

    let mut trace = GuidanceTrace::default();
    let out = match &opts.guidance {
        Some(cfg) => {
            let problems = requests
                .iter()
                .map(|r| {
                    let mut p = GuidanceProblem::single(skel, Some(stats), &r.condition, origin);
                    p.weights = cfg.weights;
                    p.clearance = cfg.clearance;
                    p
                })
                .collect();
            let mut hook = IkGuidance::new(problems, cfg.clone())?;
            let out = sample(&mut predictor, &mut hook, &ckpt.schedule, frames, dim, &seeds)?;
            trace = hook.trace;
            out
        }
        None => sample(&mut predictor, &mut NoGuidance, &ckpt.schedule, frames, dim, &seeds)?,
    };

    let motions = out.iter().map(|m| stats.denormalize(m)).collect::<Result<Vec<_>>>()?;
    let poses = motions
        .iter()
        .map(|m| forward_kinematics_from(m, skel, origin))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated { motions, poses, trace })
}
