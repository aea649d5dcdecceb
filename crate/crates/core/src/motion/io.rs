//! Motion files.
//!
//! JSON: `{"J": 22, "N": 60, "D": 263, "fps": 20.0, "data": [[...], ...]}`
//! with one array per frame.
//!
//! Binary (little endian): magic `KGMO`, `u32` version, `u32` J, `u32` N,
//! `u32` D, `f32` fps, then N*D `f32` values row-major. Binary files store
//! single precision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureLayout, MotionSequence};
use crate::error::{Error, Result};

pub const DEFAULT_FPS: f64 = 20.0;

const MAGIC: &[u8; 4] = b"KGMO";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 4;

/// A motion together with the metadata stored in motion files.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFile {
    pub joints: usize,
    pub fps: f64,
    pub motion: MotionSequence,
}

#[derive(Serialize, Deserialize)]
struct JsonMotion {
    #[serde(rename = "J")]
    joints: usize,
    #[serde(rename = "N")]
    frames: usize,
    #[serde(rename = "D")]
    dim: usize,
    #[serde(default = "default_fps")]
    fps: f64,
    data: Vec<Vec<f64>>,
}

fn default_fps() -> f64 {
    DEFAULT_FPS
}

impl MotionFile {
    pub fn new(joints: usize, fps: f64, motion: MotionSequence) -> Result<Self> {
        FeatureLayout::new(joints).check(motion.dim())?;
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { joints, fps, motion })
    }

    pub fn to_json(&self) -> Result<String> {
        let m = &self.motion;
        let doc = JsonMotion {
            joints: self.joints,
            frames: m.frames(),
            dim: m.dim(),
            fps: self.fps,
            data: (0..m.frames()).map(|n| m.row(n).to_vec()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonMotion = serde_json::from_str(text)?;
        if doc.data.len() != doc.frames {
            return Err(Error::DimensionMismatch {
                what: "motion file frame count",
                expected: doc.frames,
                got: doc.data.len(),
            });
        }
        let mut flat = Vec::with_capacity(doc.frames * doc.dim);
        for row in &doc.data {
            if row.len() != doc.dim {
                return Err(Error::DimensionMismatch {
                    what: "motion file row length",
                    expected: doc.dim,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let motion = MotionSequence::new(doc.frames, doc.dim, flat)?;
        Self::new(doc.joints, doc.fps, motion)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.motion;
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.joints, m.frames(), m.dim()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.fps as f32).to_le_bytes());
        for v in m.as_slice() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
            return Err(Error::InvalidArgument("not a binary motion file".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported motion file version {version}"
            )));
        }
        let joints = word(8) as usize;
        let frames = word(12) as usize;
        let dim = word(16) as usize;
        let fps = f32::from_le_bytes(bytes[20..24].try_into().unwrap()) as f64;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 4 * frames * dim {
            return Err(Error::DimensionMismatch {
                what: "binary motion payload bytes",
                expected: 4 * frames * dim,
                got: body.len(),
            });
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        Self::new(joints, fps, MotionSequence::new(frames, dim, data)?)
    }

    /// Reads JSON when the extension is `.json`, binary otherwise.
    pub fn read(path: &Path) -> Result<Self> {
        if is_json(path) {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Self::from_json(&text)
        } else {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            Self::from_bytes(&bytes)
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = if is_json(path) {
            self.to_json()?.into_bytes()
        } else {
            self.to_bytes()
        };
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
