//! Contact plans, their compilation into per-agent constraints and the
//! coupled multi-agent sampler.

mod compile;
pub mod plan;
mod sample;

pub use compile::{compile_conditions, AgentTemplate, ContactTemplate};
pub use plan::{emit_plans, parse_plans, ContactPlan, ContactStep, Relation};
pub use sample::{
    agent_seeds, circle_origins, coupled_problem, prompt_classes, sample_interaction, InteractionConfig,
    InteractionOutput, LiveConditions, DEFAULT_SEPARATION,
};
