//! Command-line front end. Each subcommand writes its outputs plus a
//! `*.run.json` manifest recording arguments, config hash, seeds and input
//! hashes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{
    config_hash, read_json, write_json, ControlNetRunConfig, DenoiserRunConfig, GenerateRunConfig,
    InteractRunConfig, RunManifest, TargetsFile,
};
use crate::diffusion::NoiseSchedule;
use crate::error::{Error, Result};
use crate::export::{export, ExportFormat, Track};
use crate::generate::{generate, GenerateOptions, SampleRequest};
use crate::guidance::{masked_distance, GuidanceMode, IterationSchedule, SpatialCondition};
use crate::interaction::{agent_seeds, parse_plans, sample_interaction, ContactPlan, Relation};
use crate::metrics::{self, torso_distances, Thresholds};
use crate::models::{
    regime_mismatch, train_controlnet, train_denoiser, Checkpoint, ControlNet, Denoiser, PromptVocab, TrainingSet,
};
use crate::motion::{forward_kinematics_from, MotionFile, RootOrigin};
use crate::planner::{
    check_plan, fetch_plans, parse_plan_text, render_prompt, Background, EndpointConfig, PlanSource,
};
use crate::skeleton::Skeleton;
use crate::synth::{generate_corpus, read_dataset, write_dataset, CorpusSpec};

/// Torso clearance reported by `interact`, meters.
const TORSO_CLEARANCE: f64 = 0.35;

#[derive(Debug, Parser)]
#[command(name = "kinguide", version, about = "Spatially controlled human motion diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic training data.
    #[command(subcommand)]
    Data(DataCommand),
    /// Train the denoiser or a ControlNet.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Single-agent generation under spatial targets.
    Generate(GenerateArgs),
    /// Multi-agent generation from a contact plan.
    Interact(InteractArgs),
    /// Contact plan tooling.
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Spatial error metrics over generated samples.
    Eval(EvalArgs),
    /// Convert a motion file for external tools.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    Denoiser {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    Controlnet {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint holding the trained denoiser.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub prompt: String,
    /// Spatial targets; without them the motion is sampled unconstrained.
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// on_mu or on_x0; overrides the config's mode and iteration schedule.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of samples, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    /// Frame count when no targets file is given.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InteractArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Which plan of the file to run.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PlanCommand {
    /// Ask the planner for contact plans and store them as JSON.
    Fetch {
        #[arg(long)]
        instruction: String,
        #[arg(long)]
        out: PathBuf,
        /// Stored planner reply used instead of the endpoint.
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long)]
        endpoint: Option<String>,
        /// Endpoint settings (JSON).
        #[arg(long)]
        endpoint_config: Option<PathBuf>,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Check a plan file against the validation rules.
    Validate {
        #[arg(long)]
        plans: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory holding `*.sample.json` records.
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long, default_value_t = metrics::SINGLE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Motion file(s); a sibling `*.sample.json` supplies the world origin.
    #[arg(long, required = true)]
    pub motion: Vec<PathBuf>,
    /// bvh, csv or viewer-json.
    #[arg(long)]
    pub format: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Links a generated motion to the targets it was generated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    /// Motion file, relative to the record.
    pub motion: String,
    pub prompt: String,
    pub seed: u64,
    pub targets: TargetsFile,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Data(DataCommand::Gen { spec, out }) => data_gen(&spec, &out),
        Command::Train(TrainCommand::Denoiser { data, config, out }) => train_denoiser_cmd(&data, config.as_deref(), &out),
        Command::Train(TrainCommand::Controlnet {
            data,
            config,
            base,
            out,
        }) => train_controlnet_cmd(&data, config.as_deref(), &base, &out),
        Command::Generate(args) => generate_cmd(&args),
        Command::Interact(args) => interact_cmd(&args),
        Command::Plan(PlanCommand::Fetch {
            instruction,
            out,
            fixture,
            endpoint,
            endpoint_config,
            frames,
        }) => plan_fetch(&instruction, &out, fixture, endpoint, endpoint_config.as_deref(), frames),
        Command::Plan(PlanCommand::Validate { plans }) => plan_validate(&plans),
        Command::Eval(args) => eval_cmd(&args),
        Command::Export(args) => export_cmd(&args),
    }
}

fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn data_gen(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: CorpusSpec = read_json(spec_path)?;
    let skel = Skeleton::default();
    let corpus = generate_corpus(&spec, &skel)?;
    create_dir(out)?;
    write_dataset(out, &corpus, skel.joint_count())?;
    let mut manifest = RunManifest::new("data gen", config_hash(&spec)?);
    manifest.seeds.push(spec.seed);
    manifest.input(spec_path)?;
    manifest.outputs.push(out.display().to_string());
    manifest.write(&out.join("run.json"))?;
    log::info!("wrote {} sequences to {}", corpus.items.len(), out.display());
    Ok(())
}

fn train_denoiser_cmd(data_dir: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg: DenoiserRunConfig = load_config(config)?;
    let skel = Skeleton::default();
    let data = read_dataset(data_dir)?;
    let vocab = PromptVocab::new(data.labels.iter().cloned());
    let prompts = data.labels.iter().map(|l| vocab.class_of(l)).collect();
    let set = TrainingSet::new(&data.motions, prompts, data.stats.clone())?;
    let schedule = NoiseSchedule::cosine(cfg.diffusion_steps);
    let mut denoiser = Denoiser::new(cfg.model.config(skel.joint_count(), vocab.len()), cfg.init_seed)?;
    let report = train_denoiser(&mut denoiser, &set, &schedule, &cfg.train)?;
    let mut ckpt = Checkpoint::new(
        denoiser.freeze()?,
        schedule,
        vocab,
        data.stats,
        set.frames(),
        data.manifest.fps,
    )?;
    ckpt.manifest.training = serde_json::json!({ "denoiser": cfg });
    ckpt.save(out)?;
    write_json(&out.join("denoiser_report.json"), &report)?;

    let mut manifest = RunManifest::new("train denoiser", config_hash(&cfg)?);
    manifest.seeds = vec![cfg.init_seed, cfg.train.seed];
    manifest.input(&data_dir.join(crate::synth::MANIFEST_FILE))?;
    manifest.input(&data_dir.join(crate::synth::STATS_FILE))?;
    manifest.outputs.push(out.display().to_string());
    manifest.write(&out.join("denoiser.run.json"))?;
    log::info!(
        "denoiser loss {:.4} -> {:.4} in {:.0} s",
        report.initial_loss().unwrap_or(f64::NAN),
        report.final_loss(20).unwrap_or(f64::NAN),
        report.seconds
    );
    Ok(())
}

fn train_controlnet_cmd(data_dir: &Path, config: Option<&Path>, base: &Path, out: &Path) -> Result<()> {
    let cfg: ControlNetRunConfig = load_config(config)?;
    let skel = Skeleton::default();
    let data = read_dataset(data_dir)?;
    let mut ckpt = Checkpoint::load(base)?;
    let vocab = &ckpt.manifest.vocab;
    let prompts = data.labels.iter().map(|l| vocab.class_of(l)).collect();
    // the checkpoint's statistics define model space
    let set = TrainingSet::new(&data.motions, prompts, ckpt.manifest.stats.clone())?;
    let mut net = ControlNet::from_denoiser(&ckpt.denoiser, cfg.init_seed)?;
    let report = train_controlnet(&ckpt.denoiser, &mut net, &set, &ckpt.schedule, &skel, &cfg.train)?;
    ckpt.set_controlnet(net)?;
    let mut training = ckpt.manifest.training.clone();
    if !training.is_object() {
        training = serde_json::json!({});
    }
    training["controlnet"] = serde_json::to_value(&cfg)?;
    ckpt.manifest.training = training;
    ckpt.save(out)?;
    write_json(&out.join("controlnet_report.json"), &report)?;

    let mut manifest = RunManifest::new("train controlnet", config_hash(&cfg)?);
    manifest.seeds = vec![cfg.init_seed, cfg.train.train.seed];
    manifest.input(&data_dir.join(crate::synth::MANIFEST_FILE))?;
    manifest.input(&base.join("manifest.json"))?;
    manifest.outputs.push(out.display().to_string());
    manifest.write(&out.join("controlnet.run.json"))?;
    log::info!(
        "ControlNet loss {:.4} -> {:.4}; frozen denoiser hash {}",
        report.initial_loss().unwrap_or(f64::NAN),
        report.final_loss(20).unwrap_or(f64::NAN),
        report.frozen_hash_after.as_deref().unwrap_or("?")
    );
    Ok(())
}

fn parse_mode(s: &str) -> Result<GuidanceMode> {
    GuidanceMode::parse(s).ok_or_else(|| Error::InvalidArgument(format!("unknown guidance mode {s:?}; use on_mu or on_x0")))
}

/// Whether the checkpoint's ControlNet was trained with guidance in the loop.
fn trained_with_guidance(ckpt: &Checkpoint) -> Option<bool> {
    ckpt.manifest.training["controlnet"]["train"]["guidance_in_loop"].as_bool()
}

fn generate_cmd(args: &GenerateArgs) -> Result<()> {
    let mut cfg: GenerateRunConfig = load_config(args.config.as_deref())?;
    if let Some(mode) = &args.mode {
        let mode = parse_mode(mode)?;
        cfg.guidance.mode = mode;
        cfg.guidance.schedule = IterationSchedule::for_mode(mode);
    }
    if args.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()));
    }
    let skel = Skeleton::default();
    let ckpt = Checkpoint::load(&args.ckpt)?;
    if let Some(msg) = trained_with_guidance(&ckpt).and_then(|g| regime_mismatch(cfg.guidance.mode, g)) {
        log::warn!("{msg}");
    }
    let targets = match &args.targets {
        Some(p) => read_json::<TargetsFile>(p)?,
        None => TargetsFile {
            frames: args.frames.unwrap_or(ckpt.manifest.frames),
            origin: RootOrigin::default(),
            targets: Vec::new(),
        },
    };
    if targets.origin != RootOrigin::default() {
        return Err(Error::Config {
            path: "origin".into(),
            message: "single-agent targets are given relative to the default origin".into(),
        });
    }
    let condition = targets.condition(&skel)?;
    let prompt = ckpt.manifest.vocab.class_of(&args.prompt);
    let requests: Vec<SampleRequest> = (0..args.samples as u64)
        .map(|i| SampleRequest {
            prompt,
            condition: condition.clone(),
            seed: args.seed.wrapping_add(i),
        })
        .collect();
    let opts = GenerateOptions {
        guidance: Some(cfg.guidance.clone()),
        use_controlnet: cfg.use_controlnet,
        cfg_weight: cfg.cfg_weight,
    };
    let start = Instant::now();
    let out = generate(&ckpt, &skel, &requests, &opts)?;
    log::info!("generated {} samples in {:.1} s", out.motions.len(), start.elapsed().as_secs_f64());

    let mut manifest = RunManifest::new("generate", config_hash(&(&cfg, &args.prompt, &targets))?);
    manifest.input(&args.ckpt.join("manifest.json"))?;
    if let Some(p) = &args.targets {
        manifest.input(p)?;
    }
    for (i, (motion, req)) in out.motions.into_iter().zip(&requests).enumerate() {
        let path = if args.samples == 1 {
            args.out.clone()
        } else {
            sidecar(&args.out, &format!("{i:03}.json"))
        };
        let file = MotionFile::new(skel.joint_count(), ckpt.manifest.fps, motion)?;
        write_text(&path, &file.to_json()?)?;
        let record = SampleRecord {
            motion: path.file_name().unwrap().to_string_lossy().into_owned(),
            prompt: args.prompt.clone(),
            seed: req.seed,
            targets: targets.clone(),
        };
        write_json(&sidecar(&path, "sample.json"), &record)?;
        manifest.seeds.push(req.seed);
        manifest.outputs.push(path.display().to_string());
    }
    write_text(&sidecar(&args.out, "trace.csv"), &out.trace.to_csv())?;
    manifest.write(&sidecar(&args.out, "run.json"))
}

#[derive(Debug, Clone, Serialize)]
struct StepReport {
    step: usize,
    relation: Relation,
    distance: f64,
    mean_distance: f64,
    satisfied: f64,
}

#[derive(Debug, Clone, Serialize)]
struct InteractReport {
    agents: usize,
    frames: usize,
    seeds: Vec<u64>,
    steps: Vec<StepReport>,
    traj_err: f64,
    threshold: f64,
    torso_clearance: f64,
    torso_clear_fraction: f64,
    min_torso_distance: f64,
    seconds: f64,
}

fn load_plans(path: &Path) -> Result<Vec<ContactPlan>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        parse_plans(&text, Skeleton::default().joint_count())
    } else {
        let parsed = parse_plan_text(&text, &Skeleton::default(), crate::interaction::plan::DEFAULT_FRAMES, 20.0)?;
        for d in &parsed.diagnostics {
            log::warn!("{d}");
        }
        Ok(parsed.plans)
    }
}

fn interact_cmd(args: &InteractArgs) -> Result<()> {
    let cfg: InteractRunConfig = load_config(args.config.as_deref())?;
    let skel = Skeleton::default();
    let plans = load_plans(&args.plan)?;
    let plan = plans.get(args.index).ok_or_else(|| {
        Error::InvalidArgument(format!("plan index {} out of range ({} plans)", args.index, plans.len()))
    })?;
    for d in check_plan(plan, skel.joint_count()) {
        log::warn!("{d}");
    }
    let ckpt = Checkpoint::load(&args.ckpt)?;
    let seeds = agent_seeds(args.seed, plan.agent_count());
    let start = Instant::now();
    let out = sample_interaction(plan, &ckpt, &skel, &cfg.interaction, &seeds)?;
    let seconds = start.elapsed().as_secs_f64();
    create_dir(&args.out)?;

    let conds = out.realized_conditions()?;
    let mut manifest = RunManifest::new("interact", config_hash(&(&cfg, plan.to_value()))?);
    manifest.seeds = seeds.clone();
    manifest.input(&args.plan)?;
    manifest.input(&args.ckpt.join("manifest.json"))?;
    for (a, motion) in out.motions.iter().enumerate() {
        let name = format!("agent{a}.json");
        let file = MotionFile::new(skel.joint_count(), ckpt.manifest.fps, motion.clone())?;
        write_text(&args.out.join(&name), &file.to_json()?)?;
        let record = SampleRecord {
            motion: name.clone(),
            prompt: plan.prompts[a].clone(),
            seed: seeds[a],
            targets: TargetsFile::from_condition(&conds[a], out.origins[a]),
        };
        write_json(&args.out.join(format!("agent{a}.sample.json")), &record)?;
        manifest.outputs.push(name);
    }

    let steps = plan
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let [(a0, j0), (a1, j1)] = s.endpoints();
            let d: Vec<f64> = (s.t_start..s.t_end.min(plan.frames))
                .map(|n| masked_distance(out.poses[a0].get(n, j0), out.poses[a1].get(n, j1), [true; 3]))
                .collect();
            let ok = d
                .iter()
                .filter(|&&d| match s.relation {
                    Relation::Contact => d <= s.distance,
                    Relation::Avoid => d >= s.distance,
                })
                .count();
            StepReport {
                step: i + 1,
                relation: s.relation,
                distance: s.distance,
                mean_distance: d.iter().sum::<f64>() / d.len().max(1) as f64,
                satisfied: ok as f64 / d.len().max(1) as f64,
            }
        })
        .collect();
    let mut torso = Vec::new();
    for a in 0..out.poses.len() {
        for b in a + 1..out.poses.len() {
            torso.extend(torso_distances(&out.poses[a], &out.poses[b], &skel));
        }
    }
    let report = InteractReport {
        agents: plan.agent_count(),
        frames: plan.frames,
        seeds,
        steps,
        traj_err: metrics::trajectory_error(&out.poses, &conds, metrics::INTERACTION_THRESHOLD)?,
        threshold: metrics::INTERACTION_THRESHOLD,
        torso_clearance: TORSO_CLEARANCE,
        torso_clear_fraction: if torso.is_empty() {
            1.0
        } else {
            torso.iter().filter(|d| **d >= TORSO_CLEARANCE).count() as f64 / torso.len() as f64
        },
        min_torso_distance: torso.iter().copied().fold(f64::INFINITY, f64::min),
        seconds,
    };
    write_json(&args.out.join("report.json"), &report)?;
    let tracks: Vec<Track> = out
        .motions
        .iter()
        .zip(&out.origins)
        .enumerate()
        .map(|(a, (m, o))| Track {
            name: format!("agent{a}"),
            motion: m,
            origin: *o,
        })
        .collect();
    write_text(
        &args.out.join("scene.json"),
        &export(&tracks, &skel, ckpt.manifest.fps, ExportFormat::ViewerJson)?,
    )?;
    write_text(&args.out.join("trace.csv"), &out.trace.to_csv())?;
    manifest.write(&args.out.join("run.json"))
}

fn plan_fetch(
    instruction: &str,
    out: &Path,
    fixture: Option<PathBuf>,
    endpoint: Option<String>,
    endpoint_config: Option<&Path>,
    frames: Option<usize>,
) -> Result<()> {
    let skel = Skeleton::default();
    let mut background = Background::default();
    if let Some(f) = frames {
        background.frames = f;
    }
    let prompt = render_prompt(instruction, &background)?;
    let source = match fixture {
        Some(path) => PlanSource::Fixture(path),
        None => {
            let mut cfg: EndpointConfig = load_config(endpoint_config)?;
            if let Some(url) = endpoint {
                cfg.url = url;
            }
            PlanSource::Endpoint(cfg)
        }
    };
    let raw = fetch_plans(&prompt, &source)?;
    let parsed = parse_plan_text(&raw, &skel, background.frames, background.fps)?;
    for d in &parsed.diagnostics {
        log::warn!("{d}");
    }
    if parsed.plans.is_empty() {
        return Err(Error::NoPlans);
    }
    write_text(out, &crate::interaction::emit_plans(&parsed.plans))?;
    write_text(&sidecar(out, "raw.txt"), &raw)?;
    let mut manifest = RunManifest::new("plan fetch", crate::config::sha256_hex(prompt.as_bytes()));
    if let PlanSource::Fixture(p) = &source {
        manifest.input(p)?;
    }
    manifest.outputs.push(out.display().to_string());
    manifest.write(&sidecar(out, "run.json"))?;
    println!("{} plans written to {}", parsed.plans.len(), out.display());
    Ok(())
}

fn plan_validate(path: &Path) -> Result<()> {
    let plans = load_plans(path)?;
    let joints = Skeleton::default().joint_count();
    let mut errors = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        for d in check_plan(plan, joints) {
            let d = d.in_plan(i);
            println!("{d}");
            if d.is_error() {
                errors.push(d);
            }
        }
    }
    if errors.is_empty() {
        println!("{} plans valid", plans.len());
        Ok(())
    } else {
        Err(Error::Validation(errors))
    }
}

fn eval_cmd(args: &EvalArgs) -> Result<()> {
    if !(args.threshold > 0.0 && args.threshold.is_finite()) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    let skel = Skeleton::default();
    let mut records: Vec<PathBuf> = fs::read_dir(&args.generated)
        .map_err(|e| Error::io(&args.generated, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".sample.json"))
        .collect();
    records.sort();
    let mut poses = Vec::new();
    let mut conds: Vec<SpatialCondition> = Vec::new();
    for path in &records {
        let record: SampleRecord = read_json(path)?;
        let file = MotionFile::read(&args.generated.join(&record.motion))?;
        poses.push(forward_kinematics_from(&file.motion, &skel, record.targets.origin)?);
        conds.push(record.targets.condition(&skel)?);
    }
    let report = metrics::evaluate(&poses, &conds, &skel, Thresholds::uniform(args.threshold))?;
    write_text(&args.report, &serde_json::to_string_pretty(&report)?)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

/// World origin for a motion file: from its sample record when present.
fn motion_origin(path: &Path) -> Result<RootOrigin> {
    let record = sidecar(path, "sample.json");
    if record.exists() {
        Ok(read_json::<SampleRecord>(&record)?.targets.origin)
    } else {
        Ok(RootOrigin::default())
    }
}

fn export_cmd(args: &ExportArgs) -> Result<()> {
    let format = ExportFormat::parse(&args.format)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown export format {:?}", args.format)))?;
    let skel = Skeleton::default();
    let mut files = Vec::new();
    for p in &args.motion {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let file = if text.trim_start().starts_with('{') {
            MotionFile::from_json(&text)?
        } else {
            MotionFile::read(p)?
        };
        files.push((p, file, motion_origin(p)?));
    }
    let fps = files[0].1.fps;
    let tracks: Vec<Track> = files
        .iter()
        .map(|(p, f, o)| Track {
            name: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            motion: &f.motion,
            origin: *o,
        })
        .collect();
    write_text(&args.out, &export(&tracks, &skel, fps, format)?)
}
