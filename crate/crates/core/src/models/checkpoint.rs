//! Checkpoint directories: `manifest.json`, `denoiser.safetensors` and,
//! once trained, `controlnet.safetensors`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{ControlNet, Denoiser, ModelConfig};
use super::vocab::PromptVocab;
use crate::diffusion::NoiseSchedule;
use crate::error::{Error, Result};
use crate::config::{read_json, write_json};
use crate::synth::NormStats;

pub const CHECKPOINT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const DENOISER_FILE: &str = "denoiser.safetensors";
const CONTROLNET_FILE: &str = "controlnet.safetensors";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub version: u32,
    pub config: ModelConfig,
    pub frames: usize,
    pub fps: f64,
    pub schedule_steps: usize,
    pub schedule_hash: String,
    pub vocab: PromptVocab,
    pub stats: NormStats,
    pub denoiser_hash: String,
    #[serde(default)]
    pub controlnet_hash: Option<String>,
    /// Training settings as recorded by the trainer.
    #[serde(default)]
    pub training: serde_json::Value,
}

/// A trained model set ready for sampling.
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub schedule: NoiseSchedule,
    pub denoiser: Denoiser,
    pub controlnet: Option<ControlNet>,
}

impl Checkpoint {
    pub fn new(
        denoiser: Denoiser,
        schedule: NoiseSchedule,
        vocab: PromptVocab,
        stats: NormStats,
        frames: usize,
        fps: f64,
    ) -> Result<Self> {
        if vocab.len() != denoiser.config.vocab {
            return Err(Error::DimensionMismatch {
                what: "prompt vocabulary",
                expected: denoiser.config.vocab,
                got: vocab.len(),
            });
        }
        if stats.dim() != denoiser.config.dim {
            return Err(Error::DimensionMismatch {
                what: "normalization statistics",
                expected: denoiser.config.dim,
                got: stats.dim(),
            });
        }
        let manifest = CheckpointManifest {
            version: CHECKPOINT_VERSION,
            config: denoiser.config,
            frames,
            fps,
            schedule_steps: schedule.steps(),
            schedule_hash: schedule.hash(),
            vocab,
            stats,
            denoiser_hash: denoiser.store().hash()?,
            controlnet_hash: None,
            training: serde_json::Value::Null,
        };
        Ok(Self {
            manifest,
            schedule,
            denoiser,
            controlnet: None,
        })
    }

    /// Attaches a ControlNet and records its hash.
    pub fn set_controlnet(&mut self, net: ControlNet) -> Result<()> {
        self.manifest.controlnet_hash = Some(net.store().hash()?);
        self.controlnet = Some(net);
        Ok(())
    }

    pub fn save(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.manifest.denoiser_hash = self.denoiser.store().hash()?;
        self.denoiser.store().save(&dir.join(DENOISER_FILE))?;
        if let Some(net) = &self.controlnet {
            self.manifest.controlnet_hash = Some(net.store().hash()?);
            net.store().save(&dir.join(CONTROLNET_FILE))?;
        }
        self.manifest.schedule_hash = self.schedule.hash();
        write_json(&dir.join(MANIFEST), &self.manifest)?;
        fs::write(dir.join("schedule.json"), self.schedule.to_json()).map_err(|e| Error::io(dir, e))
    }

    /// Loads and verifies weights against the recorded hashes. The denoiser
    /// comes back frozen.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: CheckpointManifest = read_json(&dir.join(MANIFEST))?;
        if manifest.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", manifest.version)));
        }
        let sched_path = dir.join("schedule.json");
        let schedule = match fs::read_to_string(&sched_path) {
            Ok(text) => NoiseSchedule::from_json(&text)?,
            Err(_) => NoiseSchedule::cosine(manifest.schedule_steps),
        };
        if schedule.hash() != manifest.schedule_hash {
            return Err(Error::Checkpoint("noise schedule does not match the recorded hash".into()));
        }
        let mut denoiser = Denoiser::new(manifest.config, 0)?;
        denoiser.store_mut().load(&dir.join(DENOISER_FILE))?;
        if denoiser.store().hash()? != manifest.denoiser_hash {
            return Err(Error::Checkpoint("denoiser weights do not match the recorded hash".into()));
        }
        let denoiser = denoiser.freeze()?;
        let controlnet = match &manifest.controlnet_hash {
            Some(hash) => {
                let mut net = ControlNet::empty(manifest.config)?;
                net.store_mut().load(&dir.join(CONTROLNET_FILE))?;
                if &net.store().hash()? != hash {
                    return Err(Error::Checkpoint("ControlNet weights do not match the recorded hash".into()));
                }
                Some(net)
            }
            None => None,
        };
        Ok(Self {
            manifest,
            schedule,
            denoiser,
            controlnet,
        })
    }
}
