//! Planner prompt assembly, completion retrieval and plan-text parsing.

pub mod client;
pub mod rules;
pub mod template;
pub mod text;

pub use client::{fetch_plans, EndpointConfig, PlanSource, API_KEY_ENV};
pub use rules::{check_plan, Diagnostic, Rule, Severity};
pub use template::{render_prompt, template_hash, Background};
pub use text::{emit_plan_text, parse_plan_text, ParsedPlans};
