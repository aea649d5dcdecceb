//! Parser for planner output in the block text format:
//!
//! ```text
//! [Start of Plan 1]
//! Text 1: A person lunges towards another with his right foot.
//! Text 2: A person parries the lunged attack while preparing to counter.
//! Step 1: {right_foot, left_knee, 5, 10, contact, 0.3}
//! [End of Plan 1]
//! ```

use crate::error::{Error, Result};
use crate::interaction::{ContactPlan, ContactStep, Relation};
use crate::skeleton::Skeleton;

use super::rules::{self, Diagnostic, Rule};

/// Plans recovered from planner text and everything that was dropped on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPlans {
    pub plans: Vec<ContactPlan>,
    /// Diagnostics refer to plan blocks by their position in the text.
    pub diagnostics: Vec<Diagnostic>,
}

struct Block {
    prompts: Vec<(usize, String)>,
    steps: Vec<(usize, String)>,
}

/// Parses all plan blocks. Joint names are matched against the skeleton
/// table ignoring case and treating spaces, dashes and underscores alike.
/// Steps with unresolvable names or invalid ranges are dropped with a
/// diagnostic; a plan is kept when at least one of its steps survives.
pub fn parse_plan_text(raw: &str, skeleton: &Skeleton, frames: usize, fps: f64) -> Result<ParsedPlans> {
    let blocks = split_blocks(raw);
    if blocks.is_empty() {
        return Err(Error::NoPlans);
    }
    let mut plans = Vec::new();
    let mut diagnostics = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        let mut diags = Vec::new();
        let agents = block
            .prompts
            .iter()
            .map(|(k, _)| *k)
            .max()
            .unwrap_or(2)
            .max(2);
        let mut prompts = vec![String::new(); agents];
        for (k, text) in &block.prompts {
            prompts[k - 1] = text.clone();
        }
        let mut plan = ContactPlan {
            prompts,
            steps: Vec::new(),
            frames,
            fps,
        };
        for (i, (_, body)) in block.steps.iter().enumerate() {
            match parse_step(body, skeleton) {
                Ok(step) => {
                    plan.steps.push(step);
                    let idx = plan.steps.len() - 1;
                    let errors: Vec<_> = rules::check_step(&plan, idx, skeleton.joint_count())
                        .into_iter()
                        .filter(Diagnostic::is_error)
                        .map(|mut d| {
                            d.step = Some(i);
                            d
                        })
                        .collect();
                    if !errors.is_empty() {
                        plan.steps.pop();
                        diags.extend(errors);
                    }
                }
                Err(d) => diags.push(d.at_step(i)),
            }
        }
        diags.extend(rules::check_prompts(&plan));
        if plan.steps.is_empty() {
            diags.push(Diagnostic::new(Rule::Syntax, "plan has no usable steps; dropped"));
        } else {
            diags.extend(rules::check_overlaps(&plan));
            diags.extend(rules::check_transitions(&plan));
            plans.push(plan);
        }
        diagnostics.extend(diags.into_iter().map(|d| d.in_plan(b)));
    }
    Ok(ParsedPlans { plans, diagnostics })
}

fn clean(line: &str) -> String {
    line.replace(['$', '\\'], "").trim().to_string()
}

fn split_blocks(raw: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    for (line_no, line) in raw.lines().enumerate() {
        let line = clean(line);
        let lower = line.to_lowercase();
        if lower.starts_with("[start of plan") {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            current = Some(Block {
                prompts: Vec::new(),
                steps: Vec::new(),
            });
            continue;
        }
        if lower.starts_with("[end of plan") {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            continue;
        }
        let Some(block) = current.as_mut() else { continue };
        if let Some(rest) = lower.strip_prefix("text") {
            if let Some((num, _)) = rest.split_once(':') {
                if let Ok(k) = num.trim().parse::<usize>() {
                    if k >= 1 {
                        let text = line.split_once(':').map(|(_, t)| t.trim()).unwrap_or("");
                        block.prompts.push((k, text.to_string()));
                        continue;
                    }
                }
            }
        }
        if lower.starts_with("step") {
            block.steps.push((line_no, line));
        }
    }
    if let Some(b) = current {
        blocks.push(b);
    }
    blocks
}

fn parse_step(line: &str, skeleton: &Skeleton) -> std::result::Result<ContactStep, Diagnostic> {
    let open = line.find('{');
    let close = line.rfind('}');
    let (Some(open), Some(close)) = (open, close) else {
        return Err(Diagnostic::new(Rule::Syntax, format!("no {{...}} group in `{line}`")));
    };
    if close <= open {
        return Err(Diagnostic::new(Rule::Syntax, format!("malformed group in `{line}`")));
    }
    let fields: Vec<&str> = line[open + 1..close].split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(Diagnostic::new(
            Rule::StepArity,
            format!("expected 6 fields, found {}", fields.len()),
        ));
    }
    let joint = |name: &str| {
        skeleton
            .resolve_joint_name(name)
            .ok_or_else(|| Diagnostic::new(Rule::UnknownJoint, format!("unknown joint `{name}`")))
    };
    let frame = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Diagnostic::new(Rule::FrameBounds, format!("`{s}` is not a frame index")))
    };
    let j1 = joint(fields[0])?;
    let j2 = joint(fields[1])?;
    let t_start = frame(fields[2])?;
    let t_end = frame(fields[3])?;
    let relation = Relation::from_word(fields[4]).ok_or_else(|| {
        Diagnostic::new(
            Rule::RelationVocabulary,
            format!("`{}` is neither contact nor avoid", fields[4]),
        )
    })?;
    let distance = fields[5]
        .parse::<f64>()
        .map_err(|_| Diagnostic::new(Rule::Distance, format!("`{}` is not a distance", fields[5])))?;
    Ok(ContactStep::new(j1, j2, t_start, t_end, relation, distance))
}

/// Renders plans back into the block text format.
pub fn emit_plan_text(plans: &[ContactPlan], skeleton: &Skeleton) -> String {
    let names = skeleton.joint_names();
    let mut out = String::new();
    for (i, plan) in plans.iter().enumerate() {
        out.push_str(&format!("[Start of Plan {}]\n", i + 1));
        for (k, p) in plan.prompts.iter().enumerate() {
            out.push_str(&format!("Text {}: {}\n", k + 1, p));
        }
        for (k, s) in plan.steps.iter().enumerate() {
            out.push_str(&format!(
                "Step {}: {{{}, {}, {}, {}, {}, {}}}\n",
                k + 1,
                names[s.j1],
                names[s.j2],
                s.t_start,
                s.t_end,
                s.relation,
                s.distance
            ));
        }
        out.push_str(&format!("[End of Plan {}]\n\n", i + 1));
    }
    out
}
