use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NormStats;
use crate::error::{Error, Result};
use crate::math::{self, Mat3, Vec3};
use crate::motion::{to_relative, GlobalPose, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;

/// Procedural motion families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Walk,
    Reach,
    Stand,
    Turn,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Walk, Task::Reach, Task::Stand, Task::Turn];

    /// Prompt label stored with generated sequences.
    pub fn label(self) -> &'static str {
        match self {
            Task::Walk => "a person walks",
            Task::Reach => "a person reaches out with one hand",
            Task::Stand => "a person stands still",
            Task::Turn => "a person turns around",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Walk => "walk",
            Task::Reach => "reach",
            Task::Stand => "stand",
            Task::Turn => "turn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub tasks: Vec<Task>,
    pub count: usize,
    pub frames: usize,
    pub seed: u64,
    #[serde(default = "default_fps")]
    pub fps: f64,
}

fn default_fps() -> f64 {
    crate::motion::DEFAULT_FPS
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::InvalidArgument(format!(
                "corpus sequences need at least 2 frames, got {}",
                self.frames
            )));
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidArgument("corpus spec lists no tasks".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidArgument("fps must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters drawn for one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub task: Task,
    pub start: [f64; 2],
    pub heading: f64,
    /// Walking speed in m/s.
    pub speed: f64,
    /// Heading change rate in rad/s.
    pub turn_rate: f64,
    pub cadence: f64,
    pub phase: f64,
    /// Arm droop from the T-pose, radians.
    pub arm_drop: f64,
    /// Reach direction in the body frame and the hand that reaches.
    pub reach_dir: Vec3,
    pub right_hand: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub task: Task,
    pub label: String,
    pub params: TaskParams,
    pub motion: MotionSequence,
    pub origin: RootOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub spec: CorpusSpec,
    pub items: Vec<CorpusItem>,
    pub stats: NormStats,
}

impl Corpus {
    pub fn motions(&self) -> Vec<MotionSequence> {
        self.items.iter().map(|i| i.motion.clone()).collect()
    }
}

/// Generates `spec.count` sequences, cycling through `spec.tasks`. Sequence
/// `i` draws from its own stream of the seeded generator, so the corpus is a
/// pure function of the spec.
pub fn generate_corpus(spec: &CorpusSpec, skel: &Skeleton) -> Result<Corpus> {
    spec.validate()?;
    let items = (0..spec.count)
        .map(|i| {
            let task = spec.tasks[i % spec.tasks.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let params = sample_params(task, &mut rng);
            let pose = synthesize(&params, skel, spec.frames, spec.fps);
            let (motion, origin) = to_relative(&pose, skel)?;
            Ok(CorpusItem {
                task,
                label: task.label().to_string(),
                params,
                motion,
                origin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = if items.is_empty() {
        NormStats::identity(crate::motion::FeatureLayout::new(skel.joint_count()).dim())
    } else {
        NormStats::from_corpus(&items.iter().map(|i| i.motion.clone()).collect::<Vec<_>>())?
    };
    Ok(Corpus {
        spec: spec.clone(),
        items,
        stats,
    })
}

pub fn sample_params<R: Rng>(task: Task, rng: &mut R) -> TaskParams {
    let sign = |rng: &mut R| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut p = TaskParams {
        task,
        start: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        heading: rng.gen_range(-PI..PI),
        speed: 0.0,
        turn_rate: 0.0,
        cadence: rng.gen_range(0.9..1.1),
        phase: rng.gen_range(0.0..TAU),
        arm_drop: rng.gen_range(1.1..1.4),
        reach_dir: [0.0, 0.0, 1.0],
        right_hand: rng.gen_bool(0.5),
    };
    match task {
        Task::Walk => {
            p.speed = rng.gen_range(0.8..1.5);
            p.turn_rate = if rng.gen_bool(0.4) {
                0.0
            } else {
                sign(rng) * rng.gen_range(0.2..0.8)
            };
        }
        Task::Turn => {
            p.turn_rate = sign(rng) * rng.gen_range(0.6..1.5);
            p.cadence = rng.gen_range(1.2..1.6);
        }
        Task::Reach => {
            let side = if p.right_hand { -1.0 } else { 1.0 };
            let dir = [
                side * rng.gen_range(0.0..0.6),
                rng.gen_range(-0.3..0.6),
                rng.gen_range(0.6..1.0),
            ];
            p.reach_dir = math::normalize(dir).map(|(u, _)| u).unwrap_or([0.0, 0.0, 1.0]);
        }
        Task::Stand => {}
    }
    p
}

/// World poses for one parameter draw.
pub fn synthesize(p: &TaskParams, skel: &Skeleton, frames: usize, fps: f64) -> GlobalPose {
    let joints = skel.joint_count();
    let sp = *skel.special();
    let idx = |name: &str| skel.joint_index(name);
    let knees = (idx("left_knee"), idx("right_knee"));
    let shoulders = (sp.left_shoulder, sp.right_shoulder);
    let elbows = (idx("left_elbow"), idx("right_elbow"));
    let leg = skel.bone_length(sp.left_ankle) + knees.0.map_or(0.0, |k| skel.bone_length(k));

    let mut positions = Vec::with_capacity(frames * joints);
    let mut root = [p.start[0], 0.0, p.start[1]];
    let mut yaw = p.heading;
    let dt = 1.0 / fps;

    for n in 0..frames {
        let time = n as f64 * dt;
        let s = (n as f64 / (frames.max(2) - 1) as f64).clamp(0.0, 1.0);
        let mut local = vec![math::IDENTITY; joints];

        // arms hang below the T-pose
        local[shoulders.0] = math::rot_z(-p.arm_drop);
        local[shoulders.1] = math::rot_z(p.arm_drop);

        let stepping = match p.task {
            Task::Walk => {
                // stride amplitude matched to speed so the stance foot stays planted
                (p.speed / (TAU * leg.max(0.1) * p.cadence)).min(0.6)
            }
            Task::Turn => 0.12,
            _ => 0.0,
        };
        if stepping > 0.0 {
            let phi = TAU * p.cadence * time + p.phase;
            let swing = stepping * phi.sin();
            local[sp.left_hip] = math::rot_x(-swing);
            local[sp.right_hip] = math::rot_x(swing);
            // the knee of the leg moving forward flexes
            if let (Some(kl), Some(kr)) = knees {
                local[kl] = math::rot_x(1.5 * stepping * phi.cos().max(0.0));
                local[kr] = math::rot_x(1.5 * stepping * (-phi.cos()).max(0.0));
            }
            let arm = 0.8 * swing;
            local[shoulders.0] = math::mat_mul(&math::rot_x(arm), &local[shoulders.0]);
            local[shoulders.1] = math::mat_mul(&math::rot_x(-arm), &local[shoulders.1]);
        }

        if p.task == Task::Reach {
            let (sh, el, rest_dir) = if p.right_hand {
                (shoulders.1, elbows.1, [-1.0, 0.0, 0.0])
            } else {
                (shoulders.0, elbows.0, [1.0, 0.0, 0.0])
            };
            // raise over the first half, hold after
            let u = smoothstep((2.0 * s).min(1.0));
            let hang = math::mat_vec(&local[sh], rest_dir);
            let dir = math::normalize(math::add(math::scale(hang, 1.0 - u), math::scale(p.reach_dir, u)))
                .map(|(v, _)| v)
                .unwrap_or(hang);
            local[sh] = math::rotation_between(rest_dir, dir);
            if let Some(e) = el {
                local[e] = math::axis_angle([0.0, 1.0, 0.0], 0.3 * (1.0 - u) * if p.right_hand { -1.0 } else { 1.0 });
            }
        }

        let body = articulate(skel, &local);
        let lowest = sp
            .feet()
            .iter()
            .map(|&f| body[f][1])
            .fold(f64::INFINITY, f64::min);
        root[1] = -lowest;
        for b in &body {
            positions.push(math::add(root, math::rotate_yaw(yaw, *b)));
        }

        let step = math::rotate_yaw(yaw, [0.0, 0.0, p.speed * dt]);
        root[0] += step[0];
        root[2] += step[2];
        yaw = math::wrap_angle(yaw + p.turn_rate * dt);
    }
    GlobalPose::new(frames, joints, positions).expect("sizes match")
}

fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

/// Joint positions relative to the root for per-joint local rotations.
pub fn articulate(skel: &Skeleton, local: &[Mat3]) -> Vec<Vec3> {
    let j = skel.joint_count();
    let mut global_rot = vec![math::IDENTITY; j];
    let mut pos = vec![[0.0; 3]; j];
    global_rot[0] = local[0];
    for i in 1..j {
        let p = skel.parent(i).expect("non-root has parent");
        pos[i] = math::add(pos[p], math::mat_vec(&global_rot[p], skel.rest_offsets()[i]));
        global_rot[i] = math::mat_mul(&global_rot[p], &local[i]);
    }
    pos
}
