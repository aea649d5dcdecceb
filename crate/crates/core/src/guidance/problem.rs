use serde::{Deserialize, Serialize};

use super::losses::{self, hinge, masked_distance, Rect};
use super::SpatialCondition;
use crate::error::{Error, Result};
use crate::interaction::Relation;
use crate::math::{self, Vec3};
use crate::motion::{fk_backward, forward_kinematics_from, FeatureLayout, GlobalPose, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;
use crate::synth::NormStats;

/// Relative weights of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub contact: f64,
    pub orientation: f64,
    pub collision: f64,
    pub region: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            contact: 1.0,
            orientation: 0.0,
            collision: 0.0,
            region: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.contact, self.orientation, self.collision, self.region];
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("loss weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Where a contact entry's target comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Fixed(Vec3),
    /// The same frame of another agent's joint, re-read on every evaluation.
    Joint { agent: usize, joint: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactEntry {
    pub frame: usize,
    pub joint: usize,
    pub target: Target,
    pub axes: [bool; 3],
    pub distance: f64,
    pub relation: Relation,
}

impl ContactEntry {
    fn weight(&self) -> f64 {
        self.axes.iter().filter(|m| **m).count() as f64
    }
}

/// One agent's variables: its world placement and its contact entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTerms {
    pub origin: RootOrigin,
    pub entries: Vec<ContactEntry>,
}

impl AgentTerms {
    pub fn from_condition(cond: &SpatialCondition, origin: RootOrigin) -> Self {
        let entries = cond
            .controlled()
            .map(|(n, j)| ContactEntry {
                frame: n,
                joint: j,
                target: Target::Fixed(cond.target(n, j)),
                axes: cond.mask(n, j),
                distance: cond.distance(n, j),
                relation: cond.relation(n, j),
            })
            .collect();
        Self { origin, entries }
    }
}

/// Loss values by term, after weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub contact: f64,
    pub orientation: f64,
    pub collision: f64,
    pub region: f64,
}

/// The guidance objective over one or more agents' motions.
///
/// Variables are the agents' motions, concatenated, in model space
/// (normalized when `stats` is set). Each evaluation maps them to raw
/// features, runs forward kinematics, sums the weighted loss terms and pulls
/// the position gradients back through kinematics and normalization.
///
/// The contact term is the masked mean of hinge losses computed per agent
/// and summed over agents; an entry whose target is another agent's joint
/// differentiates into both agents.
#[derive(Debug, Clone)]
pub struct GuidanceProblem<'a> {
    pub skeleton: &'a Skeleton,
    pub stats: Option<&'a NormStats>,
    pub frames: usize,
    pub agents: Vec<AgentTerms>,
    pub weights: LossWeights,
    /// Agent pairs with a face-to-face term.
    pub facing_pairs: Vec<[usize; 2]>,
    /// Agent pairs with a torso-separation term.
    pub collision_pairs: Vec<[usize; 2]>,
    pub clearance: f64,
    pub region: Option<Rect>,
}

pub const DEFAULT_CLEARANCE: f64 = 0.4;

impl<'a> GuidanceProblem<'a> {
    /// Single-agent contact problem against fixed targets.
    pub fn single(
        skeleton: &'a Skeleton,
        stats: Option<&'a NormStats>,
        cond: &SpatialCondition,
        origin: RootOrigin,
    ) -> Self {
        Self {
            skeleton,
            stats,
            frames: cond.frames(),
            agents: vec![AgentTerms::from_condition(cond, origin)],
            weights: LossWeights::default(),
            facing_pairs: Vec::new(),
            collision_pairs: Vec::new(),
            clearance: DEFAULT_CLEARANCE,
            region: None,
        }
    }

    pub fn dim(&self) -> usize {
        FeatureLayout::new(self.skeleton.joint_count()).dim()
    }

    /// Length of the flat variable vector.
    pub fn len(&self) -> usize {
        self.agents.len() * self.frames * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when no term can contribute (no entries, and every auxiliary
    /// term is off or has nothing to act on).
    pub fn is_trivial(&self) -> bool {
        let contact = self.weights.contact > 0.0 && self.agents.iter().any(|a| !a.entries.is_empty());
        let facing = self.weights.orientation > 0.0 && !self.facing_pairs.is_empty();
        let collision = self.weights.collision > 0.0 && !self.collision_pairs.is_empty();
        let region = self.weights.region > 0.0 && self.region.is_some();
        !(contact || facing || collision || region)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if let Some(r) = &self.region {
            r.validate()?;
        }
        let n_agents = self.agents.len();
        let joints = self.skeleton.joint_count();
        for pair in self.facing_pairs.iter().chain(&self.collision_pairs) {
            if pair[0] >= n_agents || pair[1] >= n_agents || pair[0] == pair[1] {
                return Err(Error::InvalidArgument(format!("bad agent pair {pair:?}")));
            }
        }
        for agent in &self.agents {
            for e in &agent.entries {
                if e.frame >= self.frames || e.joint >= joints {
                    return Err(Error::InvalidArgument(format!(
                        "entry at frame {}, joint {} out of range",
                        e.frame, e.joint
                    )));
                }
                if let Target::Joint { agent, joint } = e.target {
                    if agent >= n_agents || joint >= joints {
                        return Err(Error::InvalidArgument(format!(
                            "entry targets agent {agent} joint {joint}, out of range"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Flattens model-space motions into one variable vector.
    pub fn pack(&self, motions: &[MotionSequence]) -> Result<Vec<f64>> {
        if motions.len() != self.agents.len() {
            return Err(Error::DimensionMismatch {
                what: "agent count",
                expected: self.agents.len(),
                got: motions.len(),
            });
        }
        let mut x = Vec::with_capacity(self.len());
        for m in motions {
            if m.frames() != self.frames || m.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    what: "guided motion size",
                    expected: self.frames * self.dim(),
                    got: m.frames() * m.dim(),
                });
            }
            x.extend_from_slice(m.as_slice());
        }
        Ok(x)
    }

    pub fn unpack(&self, x: &[f64], motions: &mut [MotionSequence]) {
        let block = self.frames * self.dim();
        for (a, m) in motions.iter_mut().enumerate() {
            m.as_mut_slice().copy_from_slice(&x[a * block..(a + 1) * block]);
        }
    }

    fn raw_motion(&self, x: &[f64], agent: usize) -> MotionSequence {
        let block = self.frames * self.dim();
        let mut data = x[agent * block..(agent + 1) * block].to_vec();
        if let Some(s) = self.stats {
            s.denormalize_slice(&mut data);
        }
        MotionSequence::new(self.frames, self.dim(), data).expect("block size matches")
    }

    /// World poses of every agent for the variable vector `x`.
    pub fn poses(&self, x: &[f64]) -> Result<Vec<GlobalPose>> {
        (0..self.agents.len())
            .map(|a| forward_kinematics_from(&self.raw_motion(x, a), self.skeleton, self.agents[a].origin))
            .collect()
    }

    /// Loss terms for given model-space motions.
    pub fn loss(&self, motions: &[MotionSequence]) -> Result<LossBreakdown> {
        let x = self.pack(motions)?;
        let mut g = vec![0.0; x.len()];
        self.evaluate(&x, &mut g)
    }

    /// Loss breakdown at `x`; writes the gradient of the total into `grad`.
    pub fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        let raws: Vec<MotionSequence> = (0..self.agents.len()).map(|a| self.raw_motion(x, a)).collect();
        let poses = raws
            .iter()
            .zip(&self.agents)
            .map(|(m, a)| forward_kinematics_from(m, self.skeleton, a.origin))
            .collect::<Result<Vec<_>>>()?;
        let joints = self.skeleton.joint_count();
        let mut pos_grads = vec![vec![[0.0; 3]; self.frames * joints]; self.agents.len()];
        let mut out = LossBreakdown::default();
        let w = self.weights;

        if w.contact > 0.0 {
            for (a, agent) in self.agents.iter().enumerate() {
                let den: f64 = agent.entries.iter().map(ContactEntry::weight).sum();
                if den == 0.0 {
                    continue;
                }
                let scale = w.contact / den;
                for e in &agent.entries {
                    let p = poses[a].get(e.frame, e.joint);
                    let c = match e.target {
                        Target::Fixed(c) => c,
                        Target::Joint { agent: b, joint } => poses[b].get(e.frame, joint),
                    };
                    let d = masked_distance(p, c, e.axes);
                    let (l, dl) = hinge(d, e.distance, e.relation);
                    out.contact += scale * e.weight() * l;
                    if dl == 0.0 || d == 0.0 {
                        continue;
                    }
                    let mut g = [0.0; 3];
                    for k in 0..3 {
                        if e.axes[k] {
                            g[k] = scale * e.weight() * dl * (p[k] - c[k]) / d;
                        }
                    }
                    let i = e.frame * joints + e.joint;
                    pos_grads[a][i] = math::add(pos_grads[a][i], g);
                    if let Target::Joint { agent: b, joint } = e.target {
                        let ib = e.frame * joints + joint;
                        pos_grads[b][ib] = math::sub(pos_grads[b][ib], g);
                    }
                }
            }
        }

        if w.orientation > 0.0 {
            for &[a, b] in &self.facing_pairs {
                let r = losses::face_to_face_grad(&poses[a], &poses[b], self.skeleton, true)?;
                out.orientation += w.orientation * r.value;
                accumulate(&mut pos_grads[a], &r.grad_a, w.orientation);
                accumulate(&mut pos_grads[b], &r.grad_b, w.orientation);
            }
        }

        if w.collision > 0.0 {
            for &[a, b] in &self.collision_pairs {
                let r = losses::collision_grad(&poses[a], &poses[b], self.skeleton, self.clearance)?;
                out.collision += w.collision * r.value;
                accumulate(&mut pos_grads[a], &r.grad_a, w.collision);
                accumulate(&mut pos_grads[b], &r.grad_b, w.collision);
            }
        }

        if w.region > 0.0 {
            if let Some(rect) = &self.region {
                for (a, pose) in poses.iter().enumerate() {
                    let (v, g) = losses::region_grad(pose, self.skeleton, rect);
                    out.region += w.region * v;
                    accumulate(&mut pos_grads[a], &g, w.region);
                }
            }
        }

        out.total = out.contact + out.orientation + out.collision + out.region;

        let block = self.frames * self.dim();
        for (a, agent) in self.agents.iter().enumerate() {
            let mut g = fk_backward(&raws[a], self.skeleton, agent.origin, &pos_grads[a])?;
            if let Some(s) = self.stats {
                s.scale_gradient(&mut g);
            }
            grad[a * block..(a + 1) * block].copy_from_slice(&g);
        }
        Ok(out)
    }
}

fn accumulate(dst: &mut [Vec3], src: &[Vec3], w: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = math::add(*d, math::scale(*s, w));
    }
}
