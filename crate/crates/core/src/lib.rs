pub mod cli;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod export;
pub mod generate;
pub mod guidance;
pub mod interaction;
pub mod math;
pub mod metrics;
pub mod models;
pub mod motion;
pub mod optim;
pub mod planner;
pub mod skeleton;
pub mod synth;

pub use error::{Error, Result};
