//! JSON configuration files and run manifests.
//!
//! Every config struct rejects unknown keys and fills missing ones with
//! defaults. Schema errors carry the JSON path of the offending value.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::guidance::{GuidanceConfig, SpatialCondition};
use crate::interaction::{InteractionConfig, Relation};
use crate::math::Vec3;
use crate::models::{ControlTrainConfig, ModelConfig, TrainConfig};
use crate::motion::RootOrigin;
use crate::skeleton::Skeleton;

/// Parses `text`, reporting schema violations as `Error::Config` with the
/// JSON path. `source` names the input in messages.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: format!("{source}:{}", e.path()),
        message: e.inner().to_string(),
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, &path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

/// Network size overrides for `train denoiser`; `dim`, `joints` and `vocab`
/// come from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSize {
    pub layers: usize,
    pub width: usize,
    pub heads: usize,
    pub ff: usize,
}

impl Default for ModelSize {
    fn default() -> Self {
        let c = ModelConfig::new(22, 1);
        Self {
            layers: c.layers,
            width: c.width,
            heads: c.heads,
            ff: c.ff,
        }
    }
}

impl ModelSize {
    pub fn config(&self, joints: usize, vocab: usize) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            width: self.width,
            heads: self.heads,
            ff: self.ff,
            ..ModelConfig::new(joints, vocab)
        }
    }
}

/// `train denoiser --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiserRunConfig {
    pub model: ModelSize,
    pub diffusion_steps: usize,
    pub init_seed: u64,
    pub train: TrainConfig,
}

impl Default for DenoiserRunConfig {
    fn default() -> Self {
        Self {
            model: ModelSize::default(),
            diffusion_steps: 100,
            init_seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// `train controlnet --config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlNetRunConfig {
    pub init_seed: u64,
    pub train: ControlTrainConfig,
}

/// `generate --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateRunConfig {
    pub guidance: GuidanceConfig,
    pub use_controlnet: bool,
    pub cfg_weight: f64,
}

impl Default for GenerateRunConfig {
    fn default() -> Self {
        Self {
            guidance: GuidanceConfig::default(),
            use_controlnet: true,
            cfg_weight: 1.0,
        }
    }
}

/// `interact --config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractRunConfig {
    pub interaction: InteractionConfig,
}

/// A joint given by index or by skeleton name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointRef {
    Index(usize),
    Name(String),
}

impl JointRef {
    pub fn resolve(&self, skel: &Skeleton) -> Result<usize> {
        match self {
            JointRef::Index(j) if *j < skel.joint_count() => Ok(*j),
            JointRef::Index(j) => Err(Error::InvalidArgument(format!(
                "joint index {j} out of range for {} joints",
                skel.joint_count()
            ))),
            JointRef::Name(name) => skel
                .resolve_joint_name(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown joint name {name:?}"))),
        }
    }
}

fn all_axes() -> [bool; 3] {
    [true; 3]
}

fn contact() -> Relation {
    Relation::Contact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub frame: usize,
    pub joint: JointRef,
    pub position: Vec3,
    #[serde(default = "all_axes")]
    pub axes: [bool; 3],
    #[serde(default)]
    pub distance: f64,
    #[serde(default = "contact")]
    pub relation: Relation,
}

/// Spatial targets on disk (`generate --targets`, eval records). Positions
/// are world coordinates; the root starts at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsFile {
    pub frames: usize,
    #[serde(default)]
    pub origin: RootOrigin,
    #[serde(default)]
    pub targets: Vec<TargetEntry>,
}

impl TargetsFile {
    pub fn condition(&self, skel: &Skeleton) -> Result<SpatialCondition> {
        let mut cond = SpatialCondition::new(self.frames, skel.joint_count());
        for (i, t) in self.targets.iter().enumerate() {
            let joint = t.joint.resolve(skel).map_err(|e| Error::Config {
                path: format!("targets[{i}].joint"),
                message: e.to_string(),
            })?;
            cond.set_axes(t.frame, joint, t.position, t.axes, t.distance, t.relation)
                .map_err(|e| Error::Config {
                    path: format!("targets[{i}]"),
                    message: e.to_string(),
                })?;
        }
        Ok(cond)
    }

    pub fn from_condition(cond: &SpatialCondition, origin: RootOrigin) -> Self {
        Self {
            frames: cond.frames(),
            origin,
            targets: cond
                .controlled()
                .map(|(n, j)| TargetEntry {
                    frame: n,
                    joint: JointRef::Index(j),
                    position: cond.target(n, j),
                    axes: cond.mask(n, j),
                    distance: cond.distance(n, j),
                    relation: cond.relation(n, j),
                })
                .collect(),
        }
    }
}

/// Written next to every output so a run can be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Input files by path with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Records the hash of an input file, or of every file under a directory.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for p in entries {
                self.input(&p)?;
            }
        } else {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_path() {
        let err = parse_json::<DenoiserRunConfig>(r#"{"train": {"stepz": 3}}"#, "cfg.json").unwrap_err();
        match err {
            Error::Config { path, .. } => assert!(path.contains("train"), "{path}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn wrong_type_reports_path() {
        let err = parse_json::<GenerateRunConfig>(r#"{"guidance": {"weights": {"contact": "x"}}}"#, "g").unwrap_err();
        assert!(err.to_string().contains("guidance.weights.contact"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn targets_round_trip() {
        let skel = Skeleton::default();
        let text = r#"{"frames": 4, "targets": [
            {"frame": 1, "joint": "pelvis", "position": [0.5, 0.9, 1.0]},
            {"frame": 2, "joint": 21, "position": [0.1, 1.2, 0.3], "axes": [true, false, true],
             "distance": 0.2, "relation": "avoid"}]}"#;
        let file: TargetsFile = parse_json(text, "t").unwrap();
        let cond = file.condition(&skel).unwrap();
        assert_eq!(cond.controlled().count(), 2);
        assert_eq!(cond.mask_count(), 5);
        assert_eq!(cond.relation(2, 21), Relation::Avoid);
        let back = TargetsFile::from_condition(&cond, file.origin).condition(&skel).unwrap();
        assert_eq!(back, cond);
    }

    #[test]
    fn bad_joint_name_is_a_config_error() {
        let skel = Skeleton::default();
        let file: TargetsFile =
            parse_json(r#"{"frames": 4, "targets": [{"frame": 0, "joint": "tail", "position": [0, 0, 0]}]}"#, "t")
                .unwrap();
        let err = file.condition(&skel).unwrap_err();
        assert!(err.to_string().contains("targets[0].joint"), "{err}");
    }
}
