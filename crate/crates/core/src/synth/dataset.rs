//! Dataset directories: `manifest.json`, `stats.json` and one binary motion
//! file per sequence under `motions/`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusSpec, NormStats, Task};
use crate::config::{read_json, write_json};
use crate::error::{Error, Result};
use crate::motion::{MotionFile, MotionSequence, RootOrigin};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATS_FILE: &str = "stats.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub task: Task,
    pub label: String,
    pub frames: usize,
    pub origin: RootOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub joints: usize,
    pub dim: usize,
    pub fps: f64,
    pub spec: CorpusSpec,
    pub items: Vec<ManifestEntry>,
}

/// A loaded dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub motions: Vec<MotionSequence>,
    pub labels: Vec<String>,
    pub stats: NormStats,
}

pub fn write_dataset(dir: &Path, corpus: &Corpus, joints: usize) -> Result<DatasetManifest> {
    let motions_dir = dir.join("motions");
    fs::create_dir_all(&motions_dir).map_err(|e| Error::io(&motions_dir, e))?;
    let mut items = Vec::with_capacity(corpus.items.len());
    for (i, item) in corpus.items.iter().enumerate() {
        let file = format!("motions/{i:05}.kgm");
        MotionFile::new(joints, corpus.spec.fps, item.motion.clone())?.write(&dir.join(&file))?;
        items.push(ManifestEntry {
            file,
            task: item.task,
            label: item.label.clone(),
            frames: item.motion.frames(),
            origin: item.origin,
        });
    }
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        joints,
        dim: corpus.stats.dim(),
        fps: corpus.spec.fps,
        spec: corpus.spec.clone(),
        items,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    write_json(&dir.join(STATS_FILE), &corpus.stats)?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::Config {
            path: dir.join(MANIFEST_FILE).display().to_string(),
            message: format!("unsupported dataset version {}", manifest.version),
        });
    }
    let stats: NormStats = read_json(&dir.join(STATS_FILE))?;
    let mut motions = Vec::with_capacity(manifest.items.len());
    for item in &manifest.items {
        let f = MotionFile::read(&dir.join(&item.file))?;
        if f.motion.dim() != manifest.dim {
            return Err(Error::DimensionMismatch {
                what: "dataset motion dimension",
                expected: manifest.dim,
                got: f.motion.dim(),
            });
        }
        motions.push(f.motion);
    }
    let labels = manifest.items.iter().map(|i| i.label.clone()).collect();
    Ok(Dataset {
        manifest,
        motions,
        labels,
        stats,
    })
}

