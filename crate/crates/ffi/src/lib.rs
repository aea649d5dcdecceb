//! C ABI over the kinguide engine.
//!
//! Objects cross the boundary as opaque handles created by `kg_*_new` /
//! `kg_*_load` / `kg_*_parse` functions and released by the matching
//! `kg_*_free`. Every fallible call returns a `KgStatus`; on failure the
//! message is kept per thread and read with `kg_last_error`. Strings
//! returned through `char **` are released with `kg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kinguide::config::{parse_json, GenerateRunConfig, InteractRunConfig, TargetsFile};
use kinguide::generate::{generate, GenerateOptions, SampleRequest};
use kinguide::interaction::{agent_seeds, emit_plans, parse_plans, sample_interaction, ContactPlan};
use kinguide::models::Checkpoint;
use kinguide::motion::{forward_kinematics_from, MotionFile, MotionSequence, RootOrigin};
use kinguide::planner::check_plan;
use kinguide::skeleton::Skeleton;
use kinguide::Error;

/// Result of every fallible call. Values 1 to 3 match the command-line
/// exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    /// Bad input: schema, validation or dimension errors.
    Invalid = 1,
    /// Failure while running.
    Runtime = 2,
    /// Planner endpoint or credential failure.
    External = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// World placement of a motion's first frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KgOrigin {
    pub x: f64,
    pub z: f64,
    pub yaw: f64,
}

impl From<KgOrigin> for RootOrigin {
    fn from(o: KgOrigin) -> Self {
        RootOrigin {
            x: o.x,
            z: o.z,
            yaw: o.yaw,
        }
    }
}

impl From<RootOrigin> for KgOrigin {
    fn from(o: RootOrigin) -> Self {
        KgOrigin {
            x: o.x,
            z: o.z,
            yaw: o.yaw,
        }
    }
}

pub struct KgSkeleton {
    inner: Skeleton,
}

pub struct KgMotion {
    motion: MotionSequence,
    fps: f64,
    origin: RootOrigin,
}

pub struct KgCheckpoint {
    inner: Checkpoint,
}

pub struct KgPlanSet {
    plans: Vec<ContactPlan>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> KgStatus {
    match e.exit_code() {
        1 => KgStatus::Invalid,
        3 => KgStatus::External,
        _ => KgStatus::Runtime,
    }
}

enum Failure {
    Engine(Error),
    Status(KgStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> KgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgStatus::Ok,
        Ok(Err(Failure::Engine(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            KgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(KgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(KgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn optional_string<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        string(p, what).map(Some)
    }
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Status(KgStatus::Runtime, "string contains a NUL byte".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, or 0
/// when there is none.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The default 22-joint skeleton.
#[no_mangle]
pub extern "C" fn kg_skeleton_new() -> *mut KgSkeleton {
    Box::into_raw(Box::new(KgSkeleton {
        inner: Skeleton::default(),
    }))
}

/// # Safety
/// `skel` must come from `kg_skeleton_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_skeleton_free(skel: *mut KgSkeleton) {
    if !skel.is_null() {
        drop(Box::from_raw(skel));
    }
}

/// # Safety
/// `skel` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn kg_skeleton_joint_count(skel: *const KgSkeleton) -> usize {
    skel.as_ref().map_or(0, |s| s.inner.joint_count())
}

/// Parses a motion file in its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_motion_from_json(json: *const c_char, out: *mut *mut KgMotion) -> KgStatus {
    guard(|| {
        let text = string(json, "json")?;
        let out = out_ptr(out, "out")?;
        let file = MotionFile::from_json(text)?;
        *out = Box::into_raw(Box::new(KgMotion {
            motion: file.motion,
            fps: file.fps,
            origin: RootOrigin::default(),
        }));
        Ok(())
    })
}

/// Serializes a motion to the JSON motion file form.
///
/// # Safety
/// `motion` must be a live handle; `out` must be writable. Free the result
/// with `kg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kg_motion_to_json(motion: *const KgMotion, out: *mut *mut c_char) -> KgStatus {
    guard(|| {
        let m = borrow(motion, "motion")?;
        let out = out_ptr(out, "out")?;
        let joints = (m.motion.dim() + 1) / 12;
        let text = MotionFile::new(joints, m.fps, m.motion.clone())?.to_json()?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `motion` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_motion_free(motion: *mut KgMotion) {
    if !motion.is_null() {
        drop(Box::from_raw(motion));
    }
}

/// # Safety
/// `motion` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn kg_motion_frames(motion: *const KgMotion) -> usize {
    motion.as_ref().map_or(0, |m| m.motion.frames())
}

/// # Safety
/// `motion` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn kg_motion_dim(motion: *const KgMotion) -> usize {
    motion.as_ref().map_or(0, |m| m.motion.dim())
}

/// World placement recorded with the motion (zero for loaded files).
///
/// # Safety
/// `motion` must be a live handle or null (returns the zero origin).
#[no_mangle]
pub unsafe extern "C" fn kg_motion_origin(motion: *const KgMotion) -> KgOrigin {
    motion.as_ref().map(|m| m.origin.into()).unwrap_or_default()
}

/// World joint positions, `frames x joints x 3` doubles, from the motion's
/// own origin.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kg_forward_kinematics(
    motion: *const KgMotion,
    skel: *const KgSkeleton,
    out: *mut f64,
    len: usize,
) -> KgStatus {
    guard(|| {
        let m = borrow(motion, "motion")?;
        let s = borrow(skel, "skeleton")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let pose = forward_kinematics_from(&m.motion, &s.inner, m.origin)?;
        let need = pose.positions().len() * 3;
        if len < need {
            return Err(Failure::Status(
                KgStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(pose.positions()) {
            chunk.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Loads a checkpoint directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_checkpoint_load(path: *const c_char, out: *mut *mut KgCheckpoint) -> KgStatus {
    guard(|| {
        let path = string(path, "path")?;
        let out = out_ptr(out, "out")?;
        let inner = Checkpoint::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(KgCheckpoint { inner }));
        Ok(())
    })
}

/// # Safety
/// `ckpt` must come from `kg_checkpoint_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_checkpoint_free(ckpt: *mut KgCheckpoint) {
    if !ckpt.is_null() {
        drop(Box::from_raw(ckpt));
    }
}

/// Generates one motion for `prompt`. `targets_json` (a targets file) and
/// `options_json` (a generate config) may be null; without targets the
/// motion has the checkpoint's frame count and no constraints.
///
/// # Safety
/// String arguments must be NUL-terminated or null where allowed; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_generate(
    ckpt: *const KgCheckpoint,
    prompt: *const c_char,
    targets_json: *const c_char,
    options_json: *const c_char,
    seed: u64,
    out: *mut *mut KgMotion,
) -> KgStatus {
    guard(|| {
        let ckpt = &borrow(ckpt, "checkpoint")?.inner;
        let prompt = string(prompt, "prompt")?;
        let out = out_ptr(out, "out")?;
        let skel = Skeleton::default();
        let targets = match optional_string(targets_json, "targets")? {
            Some(t) => parse_json::<TargetsFile>(t, "targets")?,
            None => TargetsFile {
                frames: ckpt.manifest.frames,
                origin: RootOrigin::default(),
                targets: Vec::new(),
            },
        };
        let cfg = match optional_string(options_json, "options")? {
            Some(t) => parse_json::<GenerateRunConfig>(t, "options")?,
            None => GenerateRunConfig::default(),
        };
        let request = SampleRequest {
            prompt: ckpt.manifest.vocab.class_of(prompt),
            condition: targets.condition(&skel)?,
            seed,
        };
        let opts = GenerateOptions {
            guidance: Some(cfg.guidance),
            use_controlnet: cfg.use_controlnet,
            cfg_weight: cfg.cfg_weight,
        };
        let mut generated = generate(ckpt, &skel, &[request], &opts)?;
        *out = Box::into_raw(Box::new(KgMotion {
            motion: generated.motions.remove(0),
            fps: ckpt.manifest.fps,
            origin: RootOrigin::default(),
        }));
        Ok(())
    })
}

/// Parses a JSON plan document (one plan or an array of plans).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_plans_parse(json: *const c_char, out: *mut *mut KgPlanSet) -> KgStatus {
    guard(|| {
        let text = string(json, "json")?;
        let out = out_ptr(out, "out")?;
        let plans = parse_plans(text, Skeleton::default().joint_count())?;
        *out = Box::into_raw(Box::new(KgPlanSet { plans }));
        Ok(())
    })
}

/// # Safety
/// `plans` must come from `kg_plans_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn kg_plans_free(plans: *mut KgPlanSet) {
    if !plans.is_null() {
        drop(Box::from_raw(plans));
    }
}

/// # Safety
/// `plans` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn kg_plans_count(plans: *const KgPlanSet) -> usize {
    plans.as_ref().map_or(0, |p| p.plans.len())
}

/// Canonical JSON of the plan set.
///
/// # Safety
/// `plans` must be a live handle; `out` must be writable. Free the result
/// with `kg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kg_plans_to_json(plans: *const KgPlanSet, out: *mut *mut c_char) -> KgStatus {
    guard(|| {
        let p = borrow(plans, "plans")?;
        let out = out_ptr(out, "out")?;
        *out = into_c_string(emit_plans(&p.plans))?;
        Ok(())
    })
}

/// Runs the validation rules. Writes a JSON array of diagnostics (warnings
/// included) to `out` and returns `Invalid` when any error is present.
///
/// # Safety
/// `plans` must be a live handle; `out` must be writable. Free the result
/// with `kg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kg_plans_validate(plans: *const KgPlanSet, out: *mut *mut c_char) -> KgStatus {
    guard(|| {
        let p = borrow(plans, "plans")?;
        let out = out_ptr(out, "out")?;
        let joints = Skeleton::default().joint_count();
        let diags: Vec<_> = p
            .plans
            .iter()
            .enumerate()
            .flat_map(|(i, plan)| check_plan(plan, joints).into_iter().map(move |d| d.in_plan(i)))
            .collect();
        *out = into_c_string(serde_json::to_string(&diags).map_err(Error::from)?)?;
        let errors = diags.iter().filter(|d| d.is_error()).count();
        if errors > 0 {
            return Err(Failure::Status(KgStatus::Invalid, format!("{errors} plan errors")));
        }
        Ok(())
    })
}

/// Samples every agent of plan `index`. Writes one motion handle per agent
/// into `out` (capacity `capacity`) and the agent count into `written`, which
/// is also set when the capacity is too small.
/// `config_json` (an interact config) may be null.
///
/// # Safety
/// `out` must point to `capacity` writable handle slots; `written` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kg_interact(
    ckpt: *const KgCheckpoint,
    plans: *const KgPlanSet,
    index: usize,
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut KgMotion,
    capacity: usize,
    written: *mut usize,
) -> KgStatus {
    guard(|| {
        let ckpt = &borrow(ckpt, "checkpoint")?.inner;
        let p = borrow(plans, "plans")?;
        let written = out_ptr(written, "written")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let plan = p.plans.get(index).ok_or_else(|| {
            Failure::Status(KgStatus::Invalid, format!("plan index {index} out of range"))
        })?;
        *written = plan.agent_count();
        if capacity < plan.agent_count() {
            return Err(Failure::Status(
                KgStatus::BufferTooSmall,
                format!("need {} handle slots, got {capacity}", plan.agent_count()),
            ));
        }
        let cfg = match optional_string(config_json, "config")? {
            Some(t) => parse_json::<InteractRunConfig>(t, "config")?,
            None => InteractRunConfig::default(),
        };
        let skel = Skeleton::default();
        let seeds = agent_seeds(seed, plan.agent_count());
        let result = sample_interaction(plan, ckpt, &skel, &cfg.interaction, &seeds)?;
        for (a, (motion, origin)) in result.motions.into_iter().zip(result.origins).enumerate() {
            *out.add(a) = Box::into_raw(Box::new(KgMotion {
                motion,
                fps: ckpt.manifest.fps,
                origin,
            }));
        }
        Ok(())
    })
}
