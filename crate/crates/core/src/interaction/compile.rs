//! Plan steps to per-agent masks and contact entries.

use crate::error::{Error, Result};
use crate::guidance::{AgentTerms, ContactEntry, SpatialCondition, Target};
use crate::interaction::{ContactPlan, Relation};
use crate::motion::{GlobalPose, RootOrigin};
use crate::planner::rules::{check_overlaps, check_step, Diagnostic};

/// One controlled frame of an agent joint, tied to a partner joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactTemplate {
    pub frame: usize,
    pub joint: usize,
    pub partner: usize,
    pub partner_joint: usize,
    pub relation: Relation,
    pub distance: f64,
    /// Index of the plan step that produced it.
    pub step: usize,
}

/// Everything one agent is constrained by. Targets are left open; they come
/// from the partners' poses at sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTemplate {
    pub agent: usize,
    pub frames: usize,
    pub joints: usize,
    pub entries: Vec<ContactTemplate>,
}

impl AgentTemplate {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Row-major `frames x joints` mask.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.frames * self.joints];
        for e in &self.entries {
            m[e.frame * self.joints + e.joint] = true;
        }
        m
    }

    /// Condition with targets read from `poses` (indexed by agent). With
    /// `contact_only`, avoid entries are left out. When several entries share
    /// a frame and joint the first one wins.
    pub fn condition(&self, poses: &[&GlobalPose], contact_only: bool) -> Result<SpatialCondition> {
        let mut cond = SpatialCondition::new(self.frames, self.joints);
        for e in &self.entries {
            if contact_only && e.relation != Relation::Contact {
                continue;
            }
            if cond.is_controlled(e.frame, e.joint) {
                continue;
            }
            let pose = poses.get(e.partner).ok_or_else(|| {
                Error::InvalidArgument(format!("no pose for partner agent {}", e.partner))
            })?;
            cond.set(e.frame, e.joint, pose.get(e.frame, e.partner_joint), e.distance, e.relation)?;
        }
        Ok(cond)
    }

    /// Guidance terms whose targets track the partners' joints.
    pub fn terms(&self, origin: RootOrigin) -> AgentTerms {
        AgentTerms {
            origin,
            entries: self
                .entries
                .iter()
                .map(|e| ContactEntry {
                    frame: e.frame,
                    joint: e.joint,
                    target: Target::Joint {
                        agent: e.partner,
                        joint: e.partner_joint,
                    },
                    axes: [true; 3],
                    distance: e.distance,
                    relation: e.relation,
                })
                .collect(),
        }
    }
}

/// Compiles the steps that involve `agent`. Each step marks frames
/// `[t_start, t_end)` of the agent's joint on whichever side it appears.
pub fn compile_conditions(plan: &ContactPlan, agent: usize, joints: usize) -> Result<AgentTemplate> {
    if agent >= plan.agent_count() {
        return Err(Error::InvalidArgument(format!(
            "agent {agent} not in a plan with {} agents",
            plan.agent_count()
        )));
    }
    let errors: Vec<Diagnostic> = (0..plan.steps.len())
        .flat_map(|i| check_step(plan, i, joints))
        .chain(check_overlaps(plan))
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let mut entries = Vec::new();
    for (i, s) in plan.steps.iter().enumerate() {
        let [(a0, j0), (a1, j1)] = s.endpoints();
        for (me, mine, other, theirs) in [(a0, j0, a1, j1), (a1, j1, a0, j0)] {
            if me != agent {
                continue;
            }
            entries.extend((s.t_start..s.t_end).map(|frame| ContactTemplate {
                frame,
                joint: mine,
                partner: other,
                partner_joint: theirs,
                relation: s.relation,
                distance: s.distance,
                step: i,
            }));
        }
    }
    entries.sort_by_key(|e| (e.frame, e.joint, e.step));
    Ok(AgentTemplate {
        agent,
        frames: plan.frames,
        joints,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::ContactStep;

    fn plan(steps: Vec<ContactStep>) -> ContactPlan {
        let mut p = ContactPlan::two_person("a person waves", "a person waves", steps);
        p.frames = 64;
        p
    }

    #[test]
    fn single_step_marks_its_window() {
        let p = plan(vec![ContactStep::new(11, 4, 5, 10, Relation::Contact, 0.3)]);
        let t = compile_conditions(&p, 0, 22).unwrap();
        let mask = t.mask();
        for n in 0..64 {
            for j in 0..22 {
                assert_eq!(mask[n * 22 + j], j == 11 && (5..10).contains(&n), "frame {n} joint {j}");
            }
        }
        let t1 = compile_conditions(&p, 1, 22).unwrap();
        assert!(t1.entries.iter().all(|e| e.joint == 4 && e.partner_joint == 11 && e.partner == 0));
    }

    #[test]
    fn disjoint_steps_union() {
        let p = plan(vec![
            ContactStep::new(20, 21, 5, 10, Relation::Contact, 0.0),
            ContactStep::new(15, 15, 30, 38, Relation::Avoid, 0.5),
        ]);
        let t = compile_conditions(&p, 0, 22).unwrap();
        assert_eq!(t.mask().iter().filter(|m| **m).count(), 5 + 8);
    }

    #[test]
    fn conflicting_overlap_names_both_steps() {
        let p = plan(vec![
            ContactStep::new(21, 21, 5, 10, Relation::Contact, 0.0),
            ContactStep::new(21, 15, 8, 12, Relation::Contact, 0.2),
        ]);
        let err = compile_conditions(&p, 0, 22).unwrap_err().to_string();
        assert!(err.contains("steps 1 and 2"), "{err}");
    }
}
