#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Instant;

use kinguide::diffusion::NoiseSchedule;
use kinguide::models::{
    train_controlnet, train_denoiser, Checkpoint, ControlNet, ControlTrainConfig, Denoiser, MaskRegime, ModelConfig,
    PromptVocab, TrainConfig, TrainingSet,
};
use kinguide::motion::MotionSequence;
use kinguide::skeleton::Skeleton;
use kinguide::synth::{generate_corpus, Corpus, CorpusSpec, Task};

pub const FRAMES: usize = 64;
pub const STEPS: usize = 100;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn corpus(count: usize, frames: usize, seed: u64) -> Corpus {
    let spec = CorpusSpec {
        tasks: Task::ALL.to_vec(),
        count,
        frames,
        seed,
        fps: 20.0,
    };
    generate_corpus(&spec, &Skeleton::default()).expect("corpus")
}

pub fn bits(motions: &[MotionSequence]) -> Vec<u64> {
    motions
        .iter()
        .flat_map(|m| m.as_slice().iter().map(|v| v.to_bits()))
        .collect()
}

/// Desk-scale models: one denoiser with a root-only ControlNet and a
/// random-joint ControlNet.
pub struct DeskModels {
    pub root: Checkpoint,
    pub joint: Checkpoint,
    pub train_seconds: f64,
    /// Frozen denoiser hash before and after each ControlNet run.
    pub frozen_hashes: Vec<(String, String)>,
    pub denoiser_losses: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub struct DeskRecipe {
    pub corpus: usize,
    pub denoiser_steps: usize,
    pub controlnet_steps: usize,
    pub denoiser_lr: f64,
    pub controlnet_lr: f64,
}

impl DeskRecipe {
    /// Cache subdirectory name; a changed recipe never reuses stale models.
    pub fn key(&self) -> String {
        format!(
            "c{}-d{}-n{}-lr{}-{}",
            self.corpus, self.denoiser_steps, self.controlnet_steps, self.denoiser_lr, self.controlnet_lr
        )
    }
}

impl Default for DeskRecipe {
    fn default() -> Self {
        Self {
            corpus: 512,
            denoiser_steps: 600,
            controlnet_steps: 250,
            denoiser_lr: 1e-3,
            controlnet_lr: 5e-4,
        }
    }
}

pub fn train_desk_models(recipe: DeskRecipe, dir: &Path) -> DeskModels {
    let skel = Skeleton::default();
    let start = Instant::now();
    let corpus = corpus(recipe.corpus, FRAMES, 1);
    let vocab = PromptVocab::new(corpus.items.iter().map(|i| i.label.clone()));
    let prompts = corpus.items.iter().map(|i| vocab.class_of(&i.label)).collect();
    let data = TrainingSet::new(&corpus.motions(), prompts, corpus.stats.clone()).expect("training set");
    let sched = NoiseSchedule::cosine(STEPS);

    let mut denoiser = Denoiser::new(ModelConfig::new(skel.joint_count(), vocab.len()), 0).expect("denoiser");
    let base = TrainConfig {
        steps: recipe.denoiser_steps,
        lr: recipe.denoiser_lr,
        log_every: 100,
        ..TrainConfig::default()
    };
    let report = train_denoiser(&mut denoiser, &data, &sched, &base).expect("denoiser training");
    let denoiser = denoiser.freeze().expect("freeze");

    let mut hashes = Vec::new();
    let mut nets = Vec::new();
    for (i, regime) in [MaskRegime::RootOnly, MaskRegime::RandomJoint].into_iter().enumerate() {
        let mut net = ControlNet::from_denoiser(&denoiser, 10 + i as u64).expect("controlnet");
        let cfg = ControlTrainConfig {
            train: TrainConfig {
                steps: recipe.controlnet_steps,
                lr: recipe.controlnet_lr,
                seed: 20 + i as u64,
                log_every: 50,
                ..TrainConfig::default()
            },
            regime,
            ..ControlTrainConfig::default()
        };
        let r = train_controlnet(&denoiser, &mut net, &data, &sched, &skel, &cfg).expect("controlnet training");
        hashes.push((r.frozen_hash_before.unwrap(), r.frozen_hash_after.unwrap()));
        nets.push(net);
    }
    let train_seconds = start.elapsed().as_secs_f64();

    let mut root = Checkpoint::new(denoiser, sched, vocab, corpus.stats.clone(), FRAMES, 20.0).expect("checkpoint");
    let joint_net = nets.pop().unwrap();
    root.set_controlnet(nets.pop().unwrap()).unwrap();
    root.save(&dir.join("root")).expect("save");
    let mut joint = Checkpoint::load(&dir.join("root")).expect("reload");
    joint.set_controlnet(joint_net).unwrap();
    joint.save(&dir.join("joint")).expect("save");
    let meta = serde_json::json!({
        "train_seconds": train_seconds,
        "frozen_hashes": hashes,
        "denoiser_losses": [report.initial_loss().unwrap(), report.final_loss(20).unwrap()],
    });
    std::fs::write(dir.join("meta.json"), meta.to_string()).unwrap();
    DeskModels {
        root: Checkpoint::load(&dir.join("root")).expect("load"),
        joint,
        train_seconds,
        frozen_hashes: hashes,
        denoiser_losses: (report.initial_loss().unwrap(), report.final_loss(20).unwrap()),
    }
}

/// Trains the desk-scale models, or reloads them from `cache` when a
/// previous run left them there.
pub fn desk_models(recipe: DeskRecipe, cache: Option<&Path>) -> DeskModels {
    if let Some(cache) = cache {
        let dir = &cache.join(recipe.key());
        if dir.join("meta.json").exists() {
            let meta: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap();
            let hashes: Vec<(String, String)> = serde_json::from_value(meta["frozen_hashes"].clone()).unwrap();
            let losses: (f64, f64) = serde_json::from_value(meta["denoiser_losses"].clone()).unwrap();
            return DeskModels {
                root: Checkpoint::load(&dir.join("root")).expect("cached root checkpoint"),
                joint: Checkpoint::load(&dir.join("joint")).expect("cached joint checkpoint"),
                train_seconds: meta["train_seconds"].as_f64().unwrap(),
                frozen_hashes: hashes,
                denoiser_losses: losses,
            };
        }
        std::fs::create_dir_all(dir).unwrap();
        return train_desk_models(recipe, dir);
    }
    let tmp = tempfile::tempdir().unwrap();
    train_desk_models(recipe, tmp.path())
}
