//! Procedural training motions and feature normalization.

mod dataset;
mod generate;
mod stats;

pub use dataset::{read_dataset, write_dataset, Dataset, DatasetManifest, ManifestEntry, MANIFEST_FILE, STATS_FILE};
pub use generate::{articulate, generate_corpus, sample_params, synthesize, Corpus, CorpusItem, CorpusSpec, Task, TaskParams};
pub use stats::{NormStats, STD_EPSILON};
