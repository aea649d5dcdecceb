use std::time::Instant;

use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::condition::build_condition;
use super::network::{batch_tensor, ControlNet, Denoiser};
use crate::diffusion::{q_sample, NoiseSchedule, Stage};
use crate::error::{Error, Result};
use crate::guidance::{apply_guidance, GuidanceMode, GuidanceProblem, SpatialCondition};
use crate::interaction::Relation;
use crate::motion::{forward_kinematics, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;
use crate::synth::NormStats;

/// Normalized training motions with prompt classes.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub motions: Vec<MotionSequence>,
    pub prompts: Vec<u32>,
    pub stats: NormStats,
}

impl TrainingSet {
    /// Normalizes raw motions with `stats`.
    pub fn new(raw: &[MotionSequence], prompts: Vec<u32>, stats: NormStats) -> Result<Self> {
        if raw.len() != prompts.len() {
            return Err(Error::DimensionMismatch {
                what: "prompt count",
                expected: raw.len(),
                got: prompts.len(),
            });
        }
        if raw.is_empty() {
            return Err(Error::InvalidArgument("training set is empty".into()));
        }
        let frames = raw[0].frames();
        if raw.iter().any(|m| m.frames() != frames) {
            return Err(Error::InvalidArgument("training motions must share a frame count".into()));
        }
        let motions = raw.iter().map(|m| stats.normalize(m)).collect::<Result<_>>()?;
        Ok(Self { motions, prompts, stats })
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    pub fn frames(&self) -> usize {
        self.motions[0].frames()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Probability of replacing a prompt with the null class.
    pub prompt_dropout: f64,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 32,
            lr: 1e-4,
            weight_decay: 0.01,
            seed: 0,
            prompt_dropout: 0.1,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.prompt_dropout) {
            return Err(Error::InvalidArgument("prompt dropout must be in [0, 1]".into()));
        }
        Ok(())
    }

    fn optimizer(&self, vars: Vec<candle_core::Var>) -> Result<AdamW> {
        Ok(AdamW::new(
            vars,
            ParamsAdamW {
                lr: self.lr,
                weight_decay: self.weight_decay,
                ..ParamsAdamW::default()
            },
        )?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub seconds: f64,
    /// Frozen denoiser hashes around ControlNet training.
    pub frozen_hash_before: Option<String>,
    pub frozen_hash_after: Option<String>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> Option<f64> {
        self.losses.first().copied()
    }

    /// Mean of the last `k` losses.
    pub fn final_loss(&self, k: usize) -> Option<f64> {
        let k = k.min(self.losses.len());
        (k > 0).then(|| self.losses[self.losses.len() - k..].iter().sum::<f64>() / k as f64)
    }
}

struct Draw {
    x0: Vec<MotionSequence>,
    xt: Vec<MotionSequence>,
    t: Vec<usize>,
    prompts: Vec<u32>,
    index: Vec<usize>,
}

fn draw_batch(data: &TrainingSet, sched: &NoiseSchedule, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Draw> {
    let mut d = Draw {
        x0: Vec::new(),
        xt: Vec::new(),
        t: Vec::new(),
        prompts: Vec::new(),
        index: Vec::new(),
    };
    for _ in 0..cfg.batch_size {
        let i = rng.gen_range(0..data.len());
        let t = rng.gen_range(0..sched.steps());
        let x0 = &data.motions[i];
        let noise: Vec<f64> = (0..x0.as_slice().len()).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let noise = MotionSequence::new(x0.frames(), x0.dim(), noise)?;
        d.xt.push(q_sample(x0, t, &noise, sched)?);
        d.x0.push(x0.clone());
        d.t.push(t);
        d.prompts.push(if rng.gen_bool(cfg.prompt_dropout) { 0 } else { data.prompts[i] });
        d.index.push(i);
    }
    Ok(d)
}

fn mse(pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    Ok((pred - target)?.sqr()?.mean_all()?)
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?)
}

/// Trains the denoiser to predict clean motion from noised motion.
pub fn train_denoiser(
    model: &mut Denoiser,
    data: &TrainingSet,
    sched: &NoiseSchedule,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = cfg.optimizer(model.store().vars())?;
    let device = model.store().device().clone();
    let mut report = TrainReport::default();
    for step in 0..cfg.steps {
        let b = draw_batch(data, sched, cfg, &mut rng)?;
        let xt = batch_tensor(&b.xt, &device)?;
        let x0 = batch_tensor(&b.x0, &device)?;
        let loss = mse(&model.forward(&xt, &b.t, &b.prompts, None)?, &x0)?;
        let value = scalar(&loss)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        opt.backward_step(&loss)?;
        report.losses.push(value);
        if cfg.log_every > 0 && step % cfg.log_every == 0 {
            log::info!("denoiser step {step}: loss {value:.5}");
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Which joints the random training masks keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRegime {
    #[default]
    RootOnly,
    RandomJoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlTrainConfig {
    pub train: TrainConfig,
    pub regime: MaskRegime,
    /// Runs contact guidance on the noised input before the forward pass.
    pub guidance_in_loop: bool,
    pub guidance_iterations: usize,
    /// Probability that every frame is controlled; otherwise each frame is
    /// kept with a probability drawn from `keyframe_density`.
    pub dense_probability: f64,
    pub keyframe_density: (f64, f64),
}

impl Default for ControlTrainConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            regime: MaskRegime::RootOnly,
            guidance_in_loop: true,
            guidance_iterations: 5,
            dense_probability: 0.3,
            keyframe_density: (0.05, 0.5),
        }
    }
}

/// Warning text when the training setup does not match the guidance mode
/// used at inference.
pub fn regime_mismatch(mode: GuidanceMode, guidance_in_loop: bool) -> Option<String> {
    match (mode, guidance_in_loop) {
        (GuidanceMode::OnMu, false) => Some(
            "guidance on the posterior mean expects a ControlNet trained with guidance in the loop".into(),
        ),
        (GuidanceMode::OnX0, true) => Some(
            "guidance on the clean prediction does not need guidance during ControlNet training".into(),
        ),
        _ => None,
    }
}

/// Random training mask over a ground-truth world pose.
pub fn random_condition<R: Rng>(
    pose_targets: &crate::motion::GlobalPose,
    skel: &Skeleton,
    regime: MaskRegime,
    dense_probability: f64,
    density: (f64, f64),
    rng: &mut R,
) -> Result<SpatialCondition> {
    let frames = pose_targets.frames();
    let joint = match regime {
        MaskRegime::RootOnly => skel.special().root,
        MaskRegime::RandomJoint => rng.gen_range(0..skel.joint_count()),
    };
    let mut cond = SpatialCondition::new(frames, skel.joint_count());
    let mut chosen: Vec<usize> = if rng.gen_bool(dense_probability) {
        (0..frames).collect()
    } else {
        let p = rng.gen_range(density.0..=density.1);
        (0..frames).filter(|_| rng.gen_bool(p)).collect()
    };
    if chosen.is_empty() {
        chosen.push(rng.gen_range(0..frames));
    }
    for n in chosen {
        cond.set(n, joint, pose_targets.get(n, joint), 0.0, Relation::Contact)?;
    }
    Ok(cond)
}

/// Trains the ControlNet against a frozen denoiser with the same x0 loss.
pub fn train_controlnet(
    frozen: &Denoiser,
    net: &mut ControlNet,
    data: &TrainingSet,
    sched: &NoiseSchedule,
    skel: &Skeleton,
    cfg: &ControlTrainConfig,
) -> Result<TrainReport> {
    cfg.train.validate()?;
    if !frozen.store().is_frozen() {
        return Err(Error::InvalidArgument("the denoiser must be frozen before ControlNet training".into()));
    }
    let start = Instant::now();
    let mut report = TrainReport {
        frozen_hash_before: Some(frozen.store().hash()?),
        ..TrainReport::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut opt = cfg.train.optimizer(net.store().vars())?;
    let device = net.store().device().clone();
    let stats = &data.stats;
    let origin = RootOrigin::default();
    let targets: Vec<_> = data
        .motions
        .iter()
        .map(|m| forward_kinematics(&stats.denormalize(m)?, skel))
        .collect::<Result<_>>()?;

    for step in 0..cfg.train.steps {
        let mut b = draw_batch(data, sched, &cfg.train, &mut rng)?;
        let mut conds = Vec::with_capacity(b.xt.len());
        for k in 0..b.xt.len() {
            let cond = random_condition(
                &targets[b.index[k]],
                skel,
                cfg.regime,
                cfg.dense_probability,
                cfg.keyframe_density,
                &mut rng,
            )?;
            if cfg.guidance_in_loop && cfg.guidance_iterations > 0 {
                let problem = GuidanceProblem::single(skel, Some(stats), &cond, origin);
                apply_guidance(
                    &problem,
                    std::slice::from_mut(&mut b.xt[k]),
                    cfg.guidance_iterations,
                    10,
                    b.t[k],
                    Stage::PosteriorMean,
                    None,
                )?;
            }
            let raw = stats.denormalize(&b.xt[k])?;
            conds.extend(build_condition(&raw, &cond, skel, origin)?.into_iter().map(|v| v as f32));
        }
        let frames = data.frames();
        let cond = Tensor::from_vec(conds, (b.xt.len(), frames, net.config.condition_dim()), &device)?;
        let xt = batch_tensor(&b.xt, &device)?;
        let x0 = batch_tensor(&b.x0, &device)?;
        let feats = net.forward(&xt, &b.t, &b.prompts, &cond)?;
        let loss = mse(&frozen.forward(&xt, &b.t, &b.prompts, Some(&feats))?, &x0)?;
        let value = scalar(&loss)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        opt.backward_step(&loss)?;
        report.losses.push(value);
        if cfg.train.log_every > 0 && step % cfg.train.log_every == 0 {
            log::info!("controlnet step {step}: loss {value:.5}");
        }
    }
    report.frozen_hash_after = Some(frozen.store().hash()?);
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
