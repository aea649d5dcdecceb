//! Contact plans and their JSON form.
//!
//! A plan file is a JSON array of objects:
//!
//! ```json
//! [{"text_person1": "...", "text_person2": "...",
//!   "steps": [[21, 21, 50, 60, 1, 0.05]]}]
//! ```
//!
//! Each step is `[joint of person 1, joint of person 2, start frame,
//! end frame (exclusive), relation (contact = 1, avoid = 0), distance]`.
//! Extensions accepted here: `text_person3`, ... for more agents, an
//! eight-element step `[.., agent_a, agent_b]` naming the coupled agents,
//! and optional `frames` / `fps` keys.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::planner::rules::{self, Diagnostic, Rule};

pub const DEFAULT_FRAMES: usize = 99;
pub const DEFAULT_FPS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Avoid,
    Contact,
}

impl Relation {
    pub fn code(self) -> u8 {
        match self {
            Relation::Avoid => 0,
            Relation::Contact => 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(Relation::Avoid),
            1 => Some(Relation::Contact),
            _ => None,
        }
    }

    pub fn from_word(word: &str) -> Option<Self> {
        match word.trim().to_ascii_lowercase().as_str() {
            "contact" => Some(Relation::Contact),
            "avoid" => Some(Relation::Avoid),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Avoid => "avoid",
            Relation::Contact => "contact",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactStep {
    /// Agents coupled by this step; `j1` belongs to `agents[0]`.
    pub agents: [usize; 2],
    pub j1: usize,
    pub j2: usize,
    pub t_start: usize,
    /// Exclusive.
    pub t_end: usize,
    pub relation: Relation,
    pub distance: f64,
}

impl ContactStep {
    pub fn new(j1: usize, j2: usize, t_start: usize, t_end: usize, relation: Relation, distance: f64) -> Self {
        Self {
            agents: [0, 1],
            j1,
            j2,
            t_start,
            t_end,
            relation,
            distance,
        }
    }

    /// `(agent, joint)` for both ends.
    pub fn endpoints(&self) -> [(usize, usize); 2] {
        [(self.agents[0], self.j1), (self.agents[1], self.j2)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactPlan {
    /// One prompt per agent.
    pub prompts: Vec<String>,
    pub steps: Vec<ContactStep>,
    pub frames: usize,
    pub fps: f64,
}

impl ContactPlan {
    pub fn two_person(p1: impl Into<String>, p2: impl Into<String>, steps: Vec<ContactStep>) -> Self {
        Self {
            prompts: vec![p1.into(), p2.into()],
            steps,
            frames: DEFAULT_FRAMES,
            fps: DEFAULT_FPS,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.prompts.len()
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        for (i, p) in self.prompts.iter().enumerate() {
            obj.insert(format!("text_person{}", i + 1), Value::String(p.clone()));
        }
        let steps = self
            .steps
            .iter()
            .map(|s| {
                let mut v = vec![
                    json!(s.j1),
                    json!(s.j2),
                    json!(s.t_start),
                    json!(s.t_end),
                    json!(s.relation.code()),
                    json!(s.distance),
                ];
                if s.agents != [0, 1] {
                    v.push(json!(s.agents[0]));
                    v.push(json!(s.agents[1]));
                }
                Value::Array(v)
            })
            .collect();
        obj.insert("steps".into(), Value::Array(steps));
        if self.frames != DEFAULT_FRAMES {
            obj.insert("frames".into(), json!(self.frames));
        }
        if self.fps != DEFAULT_FPS {
            obj.insert("fps".into(), json!(self.fps));
        }
        Value::Object(obj)
    }
}

/// Serializes plans as a JSON array in the plan-file layout.
pub fn emit_plans(plans: &[ContactPlan]) -> String {
    let arr = Value::Array(plans.iter().map(ContactPlan::to_value).collect());
    serde_json::to_string_pretty(&arr).expect("plan values serialize")
}

/// Parses a plan file (an array of plans or a single plan object).
///
/// All structural and range problems across every plan are collected and
/// returned together as [`Error::Validation`]; warnings do not fail parsing
/// and are available from [`rules::check_plan`].
pub fn parse_plans(text: &str, joints: usize) -> Result<Vec<ContactPlan>> {
    let value: Value = serde_json::from_str(text)?;
    let items = match value {
        Value::Array(items) => items,
        obj @ Value::Object(_) => vec![obj],
        _ => {
            return Err(Error::Validation(vec![Diagnostic::new(
                Rule::Syntax,
                "plan file must be a JSON array or object",
            )]))
        }
    };
    let mut plans = Vec::with_capacity(items.len());
    let mut errors = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let (plan, diags) = plan_from_value(item);
        let diags: Vec<_> = diags
            .into_iter()
            .chain(plan.iter().flat_map(|p| rules::check_plan(p, joints)))
            .filter(Diagnostic::is_error)
            .map(|d| d.in_plan(i))
            .collect();
        errors.extend(diags);
        if let Some(p) = plan {
            plans.push(p);
        }
    }
    if errors.is_empty() {
        Ok(plans)
    } else {
        Err(Error::Validation(errors))
    }
}

/// Parses one plan object. Steps that cannot be read are reported and left
/// out; `None` only when the value is not an object.
fn plan_from_value(value: &Value) -> (Option<ContactPlan>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let Some(obj) = value.as_object() else {
        diags.push(Diagnostic::new(Rule::Syntax, "plan entry is not an object"));
        return (None, diags);
    };

    let mut prompts = Vec::new();
    for k in 1.. {
        match obj.get(&format!("text_person{k}")) {
            Some(Value::String(s)) => prompts.push(s.clone()),
            Some(_) => {
                diags.push(Diagnostic::new(Rule::Syntax, format!("text_person{k} is not a string")));
                prompts.push(String::new());
            }
            None if k <= 2 => prompts.push(String::new()),
            None => break,
        }
    }

    let frames = match obj.get("frames") {
        None => DEFAULT_FRAMES,
        Some(v) => match v.as_u64() {
            Some(n) if n > 0 => n as usize,
            _ => {
                diags.push(Diagnostic::new(Rule::Syntax, "frames must be a positive integer"));
                DEFAULT_FRAMES
            }
        },
    };
    let fps = match obj.get("fps") {
        None => DEFAULT_FPS,
        Some(v) => match v.as_f64() {
            Some(f) if f > 0.0 => f,
            _ => {
                diags.push(Diagnostic::new(Rule::Syntax, "fps must be a positive number"));
                DEFAULT_FPS
            }
        },
    };

    let mut steps = Vec::new();
    match obj.get("steps") {
        None => diags.push(Diagnostic::new(Rule::Syntax, "plan has no steps array")),
        Some(Value::Array(raw)) => {
            for (i, s) in raw.iter().enumerate() {
                match step_from_value(s) {
                    Ok(step) => steps.push(step),
                    Err(d) => diags.push(d.at_step(i)),
                }
            }
        }
        Some(_) => diags.push(Diagnostic::new(Rule::Syntax, "steps is not an array")),
    }

    (
        Some(ContactPlan {
            prompts,
            steps,
            frames,
            fps,
        }),
        diags,
    )
}

fn step_from_value(value: &Value) -> std::result::Result<ContactStep, Diagnostic> {
    let arr = value
        .as_array()
        .filter(|a| a.len() == 6 || a.len() == 8)
        .ok_or_else(|| Diagnostic::new(Rule::StepArity, "step must be an array of 6 (or 8) numbers"))?;
    let index = |k: usize, rule: Rule, what: &str| -> std::result::Result<usize, Diagnostic> {
        match arr[k].as_i64() {
            Some(v) if v >= 0 => Ok(v as usize),
            Some(v) => Err(Diagnostic::new(rule, format!("{what} {v} is negative"))),
            None => Err(Diagnostic::new(
                Rule::StepArity,
                format!("{what} must be an integer, got {}", arr[k]),
            )),
        }
    };
    let j1 = index(0, Rule::UnknownJoint, "joint")?;
    let j2 = index(1, Rule::UnknownJoint, "joint")?;
    let t_start = index(2, Rule::FrameBounds, "start frame")?;
    let t_end = index(3, Rule::FrameBounds, "end frame")?;
    let code = arr[4]
        .as_i64()
        .ok_or_else(|| Diagnostic::new(Rule::RelationVocabulary, format!("relation {} is not 0 or 1", arr[4])))?;
    let relation = Relation::from_code(code)
        .ok_or_else(|| Diagnostic::new(Rule::RelationVocabulary, format!("relation {code} is not 0 or 1")))?;
    let distance = arr[5]
        .as_f64()
        .ok_or_else(|| Diagnostic::new(Rule::StepArity, format!("distance must be a number, got {}", arr[5])))?;
    let agents = if arr.len() == 8 {
        [
            index(6, Rule::UnknownAgent, "agent")?,
            index(7, Rule::UnknownAgent, "agent")?,
        ]
    } else {
        [0, 1]
    };
    Ok(ContactStep {
        agents,
        j1,
        j2,
        t_start,
        t_end,
        relation,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_step() {
        let plans = parse_plans(
            r#"[{"text_person1":"a","text_person2":"b","steps":[[11,4,5,10,1,0.3]]}]"#,
            22,
        )
        .unwrap();
        assert_eq!(plans[0].steps, vec![ContactStep::new(11, 4, 5, 10, Relation::Contact, 0.3)]);
        assert_eq!(plans[0].frames, 99);
    }

    #[test]
    fn errors_are_aggregated() {
        let err = parse_plans(
            r#"[{"text_person1":"a","text_person2":"b",
                "steps":[[25,4,5,10,1,0.3],[1,2,9,4,1,0.3],[1,2,3,6,7,0.1]]}]"#,
            22,
        )
        .unwrap_err();
        let Error::Validation(d) = err else { panic!() };
        let rules: Vec<_> = d.iter().map(|d| d.rule).collect();
        assert!(rules.contains(&Rule::UnknownJoint));
        assert!(rules.contains(&Rule::FrameBounds));
        assert!(rules.contains(&Rule::RelationVocabulary));
    }

    #[test]
    fn emit_round_trip() {
        let plan = ContactPlan {
            prompts: vec!["a".into(), "b".into(), "c".into()],
            steps: vec![ContactStep {
                agents: [2, 0],
                ..ContactStep::new(1, 2, 0, 5, Relation::Avoid, 0.25)
            }],
            frames: 64,
            fps: 20.0,
        };
        let text = emit_plans(std::slice::from_ref(&plan));
        assert_eq!(parse_plans(&text, 22).unwrap(), vec![plan]);
    }
}
