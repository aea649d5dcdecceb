//! Coupled multi-agent sampling.
//!
//! Every agent runs its own reverse diffusion chain. At each step the
//! ControlNet of agent `a` sees targets read from its partners' current
//! noisy motions, and one L-BFGS call optimizes all agents together on the
//! summed contact, orientation, collision and region terms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::compile::{compile_conditions, AgentTemplate};
use super::ContactPlan;
use crate::diffusion::{sample, NoGuidance};
use crate::error::{Error, Result};
use crate::guidance::{GuidanceConfig, GuidanceProblem, GuidanceTrace, IkGuidance, LossWeights, SpatialCondition};
use crate::models::{Checkpoint, ConditionSource, ModelPredictor, PromptVocab};
use crate::motion::{forward_kinematics_from, GlobalPose, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;
use crate::synth::NormStats;

pub const DEFAULT_SEPARATION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    /// `None` disables IK guidance.
    pub guidance: Option<GuidanceConfig>,
    pub use_controlnet: bool,
    pub cfg_weight: f64,
    /// Initial distance between neighboring agents, meters.
    pub separation: f64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            guidance: Some(GuidanceConfig {
                weights: LossWeights {
                    contact: 1.0,
                    orientation: 0.02,
                    collision: 1.0,
                    region: 0.0,
                },
                ..GuidanceConfig::default()
            }),
            use_controlnet: true,
            cfg_weight: 1.0,
            separation: DEFAULT_SEPARATION,
        }
    }
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.guidance {
            g.validate()?;
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidArgument("separation must be positive".into()));
        }
        if !self.cfg_weight.is_finite() {
            return Err(Error::InvalidArgument("cfg weight must be finite".into()));
        }
        Ok(())
    }
}

/// Agents evenly spaced on a circle, neighbors `separation` apart, each
/// facing the center. Agent 0 stands at `-z`.
pub fn circle_origins(count: usize, separation: f64) -> Vec<RootOrigin> {
    if count == 1 {
        return vec![RootOrigin::default()];
    }
    let radius = separation / (2.0 * (PI / count as f64).sin());
    (0..count)
        .map(|a| {
            let phi = 2.0 * PI * a as f64 / count as f64;
            RootOrigin {
                x: radius * phi.sin(),
                z: -radius * phi.cos(),
                yaw: -phi,
            }
        })
        .collect()
}

/// Per-agent noise seeds; agent 0 uses `seed` itself.
pub fn agent_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|a| seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .collect()
}

/// ControlNet conditions rebuilt from the partners' current motions.
pub struct LiveConditions<'a> {
    pub templates: &'a [AgentTemplate],
    pub origins: &'a [RootOrigin],
    pub stats: &'a NormStats,
    pub skeleton: &'a Skeleton,
}

impl LiveConditions<'_> {
    /// World poses of model-space motions.
    pub fn poses(&self, x: &[MotionSequence]) -> Result<Vec<GlobalPose>> {
        x.iter()
            .zip(self.origins)
            .enumerate()
            .map(|(a, (m, o))| {
                let raw = self.stats.denormalize(m)?;
                forward_kinematics_from(&raw, self.skeleton, *o).map_err(|e| e.for_agent(a))
            })
            .collect()
    }
}

impl ConditionSource for LiveConditions<'_> {
    fn conditions(&mut self, x_t: &[MotionSequence], _: usize) -> Result<Vec<Option<(SpatialCondition, RootOrigin)>>> {
        if x_t.len() != self.templates.len() {
            return Err(Error::DimensionMismatch {
                what: "agent count",
                expected: self.templates.len(),
                got: x_t.len(),
            });
        }
        if self.templates.iter().all(AgentTemplate::is_empty) {
            return Ok(vec![None; x_t.len()]);
        }
        let poses = self.poses(x_t)?;
        let refs: Vec<&GlobalPose> = poses.iter().collect();
        self.templates
            .iter()
            .zip(self.origins)
            .enumerate()
            .map(|(a, (tpl, o))| {
                let cond = tpl.condition(&refs, true).map_err(|e| e.for_agent(a))?;
                Ok((!cond.is_empty()).then_some((cond, *o)))
            })
            .collect()
    }
}

pub struct InteractionOutput {
    /// Raw (denormalized) motions, one per agent.
    pub motions: Vec<MotionSequence>,
    pub poses: Vec<GlobalPose>,
    pub origins: Vec<RootOrigin>,
    pub seeds: Vec<u64>,
    pub templates: Vec<AgentTemplate>,
    pub trace: GuidanceTrace,
}

impl InteractionOutput {
    /// Each agent's constraints with targets read from the final poses, for
    /// evaluation.
    pub fn realized_conditions(&self) -> Result<Vec<SpatialCondition>> {
        let refs: Vec<&GlobalPose> = self.poses.iter().collect();
        self.templates.iter().map(|t| t.condition(&refs, false)).collect()
    }
}

/// Samples one motion per agent of `plan`, seeded per agent by `seeds`.
pub fn sample_interaction(
    plan: &ContactPlan,
    ckpt: &Checkpoint,
    skel: &Skeleton,
    cfg: &InteractionConfig,
    seeds: &[u64],
) -> Result<InteractionOutput> {
    cfg.validate()?;
    let agents = plan.agent_count();
    if seeds.len() != agents {
        return Err(Error::DimensionMismatch {
            what: "agent seed count",
            expected: agents,
            got: seeds.len(),
        });
    }
    let frames = plan.frames;
    if frames != ckpt.manifest.frames {
        log::warn!(
            "plan has {frames} frames; the checkpoint was trained on {}",
            ckpt.manifest.frames
        );
    }
    let joints = skel.joint_count();
    let templates = (0..agents)
        .map(|a| compile_conditions(plan, a, joints))
        .collect::<Result<Vec<_>>>()?;
    let origins = circle_origins(agents, cfg.separation);
    let stats = &ckpt.manifest.stats;
    let prompts = prompt_classes(&ckpt.manifest.vocab, plan);

    let empty: Vec<AgentTemplate> = templates
        .iter()
        .map(|t| AgentTemplate {
            entries: Vec::new(),
            ..t.clone()
        })
        .collect();
    let mut predictor = ModelPredictor {
        checkpoint: ckpt,
        skeleton: skel,
        prompts,
        cfg_weight: cfg.cfg_weight,
        source: LiveConditions {
            templates: if cfg.use_controlnet { &templates } else { &empty },
            origins: &origins,
            stats,
            skeleton: skel,
        },
    };

    let dim = ckpt.manifest.config.dim;
    let mut trace = GuidanceTrace::default();
    let out = match &cfg.guidance {
        Some(g) => {
            let problem = coupled_problem(&templates, &origins, skel, stats, frames, g);
            let mut hook = IkGuidance::new(vec![problem], g.clone())?;
            let out = sample(&mut predictor, &mut hook, &ckpt.schedule, frames, dim, seeds)?;
            trace = hook.trace;
            out
        }
        None => sample(&mut predictor, &mut NoGuidance, &ckpt.schedule, frames, dim, seeds)?,
    };

    let motions = out.iter().map(|m| stats.denormalize(m)).collect::<Result<Vec<_>>>()?;
    let poses = motions
        .iter()
        .zip(&origins)
        .enumerate()
        .map(|(a, (m, o))| forward_kinematics_from(m, skel, *o).map_err(|e| e.for_agent(a)))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteractionOutput {
        motions,
        poses,
        origins,
        seeds: seeds.to_vec(),
        templates,
        trace,
    })
}

/// Prompt class for every agent of the plan.
pub fn prompt_classes(vocab: &PromptVocab, plan: &ContactPlan) -> Vec<u32> {
    plan.prompts.iter().map(|p| vocab.class_of(p)).collect()
}

/// The joint objective: contact entries per agent tracking partner joints,
/// face-to-face terms on every pair a step couples, and torso separation on
/// every pair of agents.
pub fn coupled_problem<'a>(
    templates: &[AgentTemplate],
    origins: &[RootOrigin],
    skel: &'a Skeleton,
    stats: &'a NormStats,
    frames: usize,
    cfg: &GuidanceConfig,
) -> GuidanceProblem<'a> {
    let mut facing_pairs: Vec<[usize; 2]> = templates
        .iter()
        .flat_map(|t| t.entries.iter().map(move |e| [t.agent.min(e.partner), t.agent.max(e.partner)]))
        .collect();
    facing_pairs.sort_unstable();
    facing_pairs.dedup();
    let n = templates.len();
    let collision_pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| [a, b])).collect();
    GuidanceProblem {
        skeleton: skel,
        stats: Some(stats),
        frames,
        agents: templates.iter().zip(origins).map(|(t, o)| t.terms(*o)).collect(),
        weights: cfg.weights,
        facing_pairs,
        collision_pairs,
        clearance: cfg.clearance,
        region: None,
    }
}
