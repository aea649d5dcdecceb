//! Noise schedule, forward noising, posterior mean and the reverse sampler.

mod sampler;
mod schedule;

pub use sampler::{sample, GuidanceHook, NoGuidance, NoiseSource, Stage, X0Predictor};
pub use schedule::{
    posterior_coefficients, posterior_mean, q_sample, q_sample_with, NoiseSchedule,
    PosteriorVariance, DEFAULT_STEPS,
};
