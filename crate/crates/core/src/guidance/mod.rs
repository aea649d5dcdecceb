//! Spatial losses and the L-BFGS guidance applied during sampling.

mod apply;
mod condition;
pub mod losses;
mod problem;

pub use apply::{apply_guidance, GuidanceConfig, GuidanceMode, GuidanceTrace, IkGuidance, IterationSchedule, StepReport};
pub use condition::SpatialCondition;
pub use losses::{
    collision_loss, contact_loss, face_to_face_loss, hinge, joint_distance, masked_distance, region_loss, Rect,
};
pub use problem::{AgentTerms, ContactEntry, GuidanceProblem, LossBreakdown, LossWeights, Target, DEFAULT_CLEARANCE};
