//! Mechanical checks on contact plans.
//!
//! Errors make a plan unusable (the sampler would index out of range or the
//! relation is meaningless). Warnings flag plans that break the planner's
//! authoring rules but can still be sampled.

use std::fmt;

use serde::Serialize;

use crate::interaction::{ContactPlan, Relation};

/// Shortest and longest allowed step duration, in frames.
pub const STEP_DURATION: (usize, usize) = (3, 10);
/// Frames that must separate steps of different relation types.
pub const TRANSITION_GAP: usize = 20;
/// Largest avoid distance allowed after a contact step.
pub const MAX_AVOID_AFTER_CONTACT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Step entry is not a six-element array of numbers (or eight with agents).
    StepArity,
    /// Joint index outside the skeleton or joint name not in the table.
    UnknownJoint,
    /// Agent index outside the plan's agent count, or a step pairing an agent with itself.
    UnknownAgent,
    /// `start < end <= N` violated.
    FrameBounds,
    /// Relation code other than contact (1) or avoid (0).
    RelationVocabulary,
    /// Negative or non-finite distance.
    Distance,
    /// Overlapping steps on the same frame and joint disagree.
    ConflictingOverlap,
    /// Step shorter or longer than the allowed duration.
    StepDuration,
    /// Steps of different types closer than the transition gap.
    TransitionGap,
    /// Avoid distance above the limit after a contact on the same pair.
    AvoidDistanceAfterContact,
    /// Missing per-person prompt.
    MissingPrompt,
    /// Prompt refers to "person 1" / "person 2" instead of "a person".
    PromptPerspective,
    /// Malformed plan text (missing fields, bad numbers).
    Syntax,
}

impl Rule {
    pub const ALL: [Rule; 13] = [
        Rule::StepArity,
        Rule::UnknownJoint,
        Rule::UnknownAgent,
        Rule::FrameBounds,
        Rule::RelationVocabulary,
        Rule::Distance,
        Rule::ConflictingOverlap,
        Rule::StepDuration,
        Rule::TransitionGap,
        Rule::AvoidDistanceAfterContact,
        Rule::MissingPrompt,
        Rule::PromptPerspective,
        Rule::Syntax,
    ];

    pub fn severity(self) -> Severity {
        match self {
            Rule::StepDuration
            | Rule::TransitionGap
            | Rule::AvoidDistanceAfterContact
            | Rule::MissingPrompt
            | Rule::PromptPerspective => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Rule::StepArity => "step-arity",
            Rule::UnknownJoint => "unknown-joint",
            Rule::UnknownAgent => "unknown-agent",
            Rule::FrameBounds => "frame-bounds",
            Rule::RelationVocabulary => "relation-vocabulary",
            Rule::Distance => "distance",
            Rule::ConflictingOverlap => "conflicting-overlap",
            Rule::StepDuration => "step-duration",
            Rule::TransitionGap => "transition-gap",
            Rule::AvoidDistanceAfterContact => "avoid-distance-after-contact",
            Rule::MissingPrompt => "missing-prompt",
            Rule::PromptPerspective => "prompt-perspective",
            Rule::Syntax => "syntax",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub plan: Option<usize>,
    pub step: Option<usize>,
    pub rule: Rule,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn new(rule: Rule, message: impl Into<String>) -> Self {
        Self {
            plan: None,
            step: None,
            rule,
            severity: rule.severity(),
            message: message.into(),
        }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = Some(step);
        self
    }

    pub fn in_plan(mut self, plan: usize) -> Self {
        self.plan = Some(plan);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 1-based positions read like the plan text
        if let Some(p) = self.plan {
            write!(f, "plan {} ", p + 1)?;
        }
        if let Some(s) = self.step {
            write!(f, "step {} ", s + 1)?;
        }
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "[{}] {sev}: {}", self.rule.code(), self.message)
    }
}

/// Checks a single step against the skeleton and frame count.
pub fn check_step(
    plan: &ContactPlan,
    index: usize,
    joints: usize,
) -> Vec<Diagnostic> {
    let s = &plan.steps[index];
    let mut out = Vec::new();
    for (who, j) in [(1, s.j1), (2, s.j2)] {
        if j >= joints {
            out.push(
                Diagnostic::new(
                    Rule::UnknownJoint,
                    format!("joint {j} of person {who} is outside the {joints}-joint skeleton"),
                )
                .at_step(index),
            );
        }
    }
    let agents = plan.agent_count();
    if s.agents[0] >= agents || s.agents[1] >= agents || s.agents[0] == s.agents[1] {
        out.push(
            Diagnostic::new(
                Rule::UnknownAgent,
                format!(
                    "step couples agents {} and {} but the plan has {agents}",
                    s.agents[0], s.agents[1]
                ),
            )
            .at_step(index),
        );
    }
    if s.t_start >= s.t_end || s.t_end > plan.frames {
        out.push(
            Diagnostic::new(
                Rule::FrameBounds,
                format!(
                    "frames {}..{} must satisfy start < end <= {}",
                    s.t_start, s.t_end, plan.frames
                ),
            )
            .at_step(index),
        );
    }
    if !(s.distance >= 0.0 && s.distance.is_finite()) {
        out.push(
            Diagnostic::new(Rule::Distance, format!("distance {} must be >= 0", s.distance))
                .at_step(index),
        );
    }
    let duration = s.t_end.saturating_sub(s.t_start);
    if s.t_start < s.t_end && !(STEP_DURATION.0..=STEP_DURATION.1).contains(&duration) {
        out.push(
            Diagnostic::new(
                Rule::StepDuration,
                format!(
                    "lasts {duration} frames; steps should last {} to {} frames",
                    STEP_DURATION.0, STEP_DURATION.1
                ),
            )
            .at_step(index),
        );
    }
    out
}

/// All diagnostics for a parsed plan, errors and warnings.
pub fn check_plan(plan: &ContactPlan, joints: usize) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for i in 0..plan.steps.len() {
        out.extend(check_step(plan, i, joints));
    }
    out.extend(check_overlaps(plan));
    out.extend(check_transitions(plan));
    out.extend(check_prompts(plan));
    out
}

/// Steps that cover the same (agent, frame, joint) must agree on relation and
/// distance, otherwise the compiled mask would hold two targets.
pub fn check_overlaps(plan: &ContactPlan) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (a, sa) in plan.steps.iter().enumerate() {
        for (b, sb) in plan.steps.iter().enumerate().skip(a + 1) {
            if sa.t_start.max(sb.t_start) >= sa.t_end.min(sb.t_end) {
                continue;
            }
            let same = sa.relation == sb.relation && sa.distance == sb.distance;
            let shares_joint = sa
                .endpoints()
                .iter()
                .any(|ea| sb.endpoints().contains(ea));
            if shares_joint && !same {
                out.push(
                    Diagnostic::new(
                        Rule::ConflictingOverlap,
                        format!(
                            "steps {} and {} overlap on frames {}..{} with different constraints",
                            a + 1,
                            b + 1,
                            sa.t_start.max(sb.t_start),
                            sa.t_end.min(sb.t_end)
                        ),
                    )
                    .at_step(b),
                );
            }
        }
    }
    out
}

/// Ordering rules between consecutive steps of the same agent pair.
pub fn check_transitions(plan: &ContactPlan) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..plan.steps.len()).collect();
    order.sort_by_key(|&i| (plan.steps[i].t_start, i));
    for (k, &i) in order.iter().enumerate() {
        let si = &plan.steps[i];
        for &j in &order[k + 1..] {
            let sj = &plan.steps[j];
            if sorted_pair(si.agents) != sorted_pair(sj.agents) {
                continue;
            }
            if si.relation != sj.relation {
                let gap = sj.t_start as i64 - si.t_end as i64;
                if gap < TRANSITION_GAP as i64 {
                    out.push(
                        Diagnostic::new(
                            Rule::TransitionGap,
                            format!(
                                "{} to {} transition leaves {gap} frames; at least {TRANSITION_GAP} expected",
                                si.relation, sj.relation
                            ),
                        )
                        .at_step(j),
                    );
                }
            }
            if si.relation == Relation::Contact
                && sj.relation == Relation::Avoid
                && sj.distance > MAX_AVOID_AFTER_CONTACT
            {
                out.push(
                    Diagnostic::new(
                        Rule::AvoidDistanceAfterContact,
                        format!(
                            "avoid distance {} after a contact exceeds {MAX_AVOID_AFTER_CONTACT}",
                            sj.distance
                        ),
                    )
                    .at_step(j),
                );
            }
        }
    }
    out
}

pub fn check_prompts(plan: &ContactPlan) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (a, p) in plan.prompts.iter().enumerate() {
        if p.trim().is_empty() {
            out.push(Diagnostic::new(
                Rule::MissingPrompt,
                format!("person {} has no prompt", a + 1),
            ));
            continue;
        }
        let lower = p.to_lowercase();
        if (1..=plan.agent_count().max(2)).any(|k| lower.contains(&format!("person {k}"))) {
            out.push(Diagnostic::new(
                Rule::PromptPerspective,
                format!("prompt of person {} names a person by number", a + 1),
            ));
        }
    }
    out
}

fn sorted_pair(p: [usize; 2]) -> [usize; 2] {
    if p[0] <= p[1] {
        p
    } else {
        [p[1], p[0]]
    }
}
