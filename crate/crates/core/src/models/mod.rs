//! The x0-predicting denoiser, the ControlNet branch, their training loops
//! and checkpoints.

mod checkpoint;
mod condition;
mod net;
mod network;
mod params;
mod predict;
mod train;
mod vocab;

pub use checkpoint::{Checkpoint, CheckpointManifest, CHECKPOINT_VERSION};
pub use condition::build_condition;
pub use network::{batch_tensor, unbatch, ControlNet, Denoiser, ModelConfig};
pub use params::ParamStore;
pub use predict::{ConditionSource, FixedConditions, ModelPredictor};
pub use train::{
    random_condition, regime_mismatch, train_controlnet, train_denoiser, ControlTrainConfig, MaskRegime,
    TrainConfig, TrainReport, TrainingSet,
};
pub use vocab::PromptVocab;
