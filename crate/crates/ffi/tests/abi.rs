//! Calls through the C entry points, plus a compile check of the header.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::{Path, PathBuf};
use std::ptr;
use std::sync::OnceLock;

use clap::Parser;
use kinguide_ffi::*;

fn last_error() -> String {
    let len = unsafe { kg_last_error(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; len + 1];
    unsafe { kg_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    CStr::from_bytes_until_nul(&buf).unwrap().to_str().unwrap().to_owned()
}

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { kg_string_free(s) };
    out
}

fn cli(args: &[&str]) {
    let parsed = kinguide::cli::Cli::try_parse_from(std::iter::once("kinguide").chain(args.iter().copied())).unwrap();
    kinguide::cli::run(parsed).unwrap();
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

struct Fixture {
    _dir: tempfile::TempDir,
    ckpt: PathBuf,
}

/// A tiny trained checkpoint shared by the sampling tests.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        let data = root.join("data");
        let ckpt = root.join("ckpt");
        let spec = write(
            &root.join("spec.json"),
            r#"{"tasks": ["walk", "reach", "stand", "turn"], "count": 8, "frames": 16, "seed": 5}"#,
        );
        cli(&["data", "gen", "--spec", &spec, "--out", data.to_str().unwrap()]);
        let dcfg = write(
            &root.join("d.json"),
            r#"{"model": {"layers": 1, "width": 16, "heads": 2, "ff": 32}, "diffusion_steps": 6, "train": {"steps": 2, "batch_size": 4}}"#,
        );
        cli(&["train", "denoiser", "--data", data.to_str().unwrap(), "--config", &dcfg, "--out", ckpt.to_str().unwrap()]);
        let ccfg = write(&root.join("c.json"), r#"{"train": {"train": {"steps": 1, "batch_size": 4}, "guidance_iterations": 1}}"#);
        let c = ckpt.to_str().unwrap();
        cli(&["train", "controlnet", "--data", data.to_str().unwrap(), "--config", &ccfg, "--base", c, "--out", c]);
        Fixture { _dir: dir, ckpt }
    })
}

fn load_checkpoint() -> *mut KgCheckpoint {
    let path = CString::new(fixture().ckpt.to_str().unwrap()).unwrap();
    let mut ck = ptr::null_mut();
    assert_eq!(unsafe { kg_checkpoint_load(path.as_ptr(), &mut ck) }, KgStatus::Ok, "{}", last_error());
    ck
}

const PLAN: &str = r#"[{"text_person1": "a person waves", "text_person2": "a person waves back",
  "frames": 16, "steps": [[21, 21, 4, 9, 1, 0.05]]}]"#;

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(kg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported_not_dereferenced() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_motion_from_json(ptr::null(), &mut m) }, KgStatus::NullPointer);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    let json = CString::new("{}").unwrap();
    assert_eq!(unsafe { kg_motion_from_json(json.as_ptr(), ptr::null_mut()) }, KgStatus::NullPointer);
    assert_eq!(unsafe { kg_skeleton_joint_count(ptr::null()) }, 0);
    assert_eq!(unsafe { kg_motion_frames(ptr::null()) }, 0);
    assert_eq!(unsafe { kg_plans_count(ptr::null()) }, 0);
    let o = unsafe { kg_motion_origin(ptr::null()) };
    assert_eq!((o.x, o.z, o.yaw), (0.0, 0.0, 0.0));
    unsafe {
        kg_motion_free(ptr::null_mut());
        kg_skeleton_free(ptr::null_mut());
        kg_plans_free(ptr::null_mut());
        kg_checkpoint_free(ptr::null_mut());
        kg_string_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_and_reports_full_length() {
    let bad = CString::new("not json").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_motion_from_json(bad.as_ptr(), &mut m) }, KgStatus::Invalid);
    let full = last_error();
    let mut small = [0x7fu8; 4];
    let len = unsafe { kg_last_error(small.as_mut_ptr() as *mut c_char, small.len()) };
    assert_eq!(len, full.len());
    assert_eq!(small[3], 0);
    assert_eq!(&small[..3], &full.as_bytes()[..3]);
}

#[test]
fn invalid_utf8_is_rejected() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_motion_from_json(bytes.as_ptr() as *const c_char, &mut m) }, KgStatus::InvalidUtf8);
}

#[test]
fn motion_json_round_trip_and_forward_kinematics() {
    let skel = kinguide::skeleton::Skeleton::default();
    let motion = kinguide::motion::MotionSequence::zeros(5, 263);
    let file = kinguide::motion::MotionFile::new(22, 20.0, motion.clone()).unwrap();
    let json = CString::new(file.to_json().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_motion_from_json(json.as_ptr(), &mut m) }, KgStatus::Ok);
    assert_eq!(unsafe { kg_motion_frames(m) }, 5);
    assert_eq!(unsafe { kg_motion_dim(m) }, 263);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { kg_motion_to_json(m, &mut out) }, KgStatus::Ok);
    let back = kinguide::motion::MotionFile::from_json(&take_string(out)).unwrap();
    assert_eq!(back.motion, motion);

    let sk = kg_skeleton_new();
    assert_eq!(unsafe { kg_skeleton_joint_count(sk) }, 22);
    let mut buf = vec![0.0; 5 * 22 * 3];
    assert_eq!(unsafe { kg_forward_kinematics(m, sk, buf.as_mut_ptr(), buf.len() - 1) }, KgStatus::BufferTooSmall);
    assert_eq!(unsafe { kg_forward_kinematics(m, sk, buf.as_mut_ptr(), buf.len()) }, KgStatus::Ok);
    let pose = kinguide::motion::forward_kinematics(&motion, &skel).unwrap();
    let expected: Vec<f64> = pose.positions().iter().flatten().copied().collect();
    assert_eq!(buf, expected);
    unsafe {
        kg_skeleton_free(sk);
        kg_motion_free(m);
    }
}

#[test]
fn plans_parse_validate_and_serialize() {
    let text = CString::new(PLAN).unwrap();
    let mut plans = ptr::null_mut();
    assert_eq!(unsafe { kg_plans_parse(text.as_ptr(), &mut plans) }, KgStatus::Ok);
    assert_eq!(unsafe { kg_plans_count(plans) }, 1);

    let mut diags = ptr::null_mut();
    assert_eq!(unsafe { kg_plans_validate(plans, &mut diags) }, KgStatus::Ok);
    let diags: serde_json::Value = serde_json::from_str(&take_string(diags)).unwrap();
    assert!(diags.as_array().unwrap().iter().all(|d| d["severity"] != "error"));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { kg_plans_to_json(plans, &mut json) }, KgStatus::Ok);
    let again = kinguide::interaction::parse_plans(&take_string(json), 22).unwrap();
    assert_eq!(again[0].frames, 16);
    unsafe { kg_plans_free(plans) };

    let bad = CString::new(r#"[{"text_person1": "a", "text_person2": "b", "steps": [[40, 0, 1, 5, 1, 0.1]]}]"#).unwrap();
    let mut plans = ptr::null_mut();
    assert_eq!(unsafe { kg_plans_parse(bad.as_ptr(), &mut plans) }, KgStatus::Invalid);
    assert!(plans.is_null());
    assert!(last_error().contains("unknown-joint"), "{}", last_error());
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let path = CString::new("/nonexistent/kinguide-checkpoint").unwrap();
    let mut ck = ptr::null_mut();
    assert_eq!(unsafe { kg_checkpoint_load(path.as_ptr(), &mut ck) }, KgStatus::Runtime);
    assert!(ck.is_null());
}

#[test]
fn generate_is_deterministic_per_seed() {
    let ck = load_checkpoint();
    let prompt = CString::new("a person walks forward").unwrap();
    let targets = CString::new(r#"{"frames": 16, "targets": [{"frame": 8, "joint": "pelvis", "position": [0.0, 0.9, 0.5]}]}"#).unwrap();
    let run = |seed| {
        let mut m = ptr::null_mut();
        let status = unsafe { kg_generate(ck, prompt.as_ptr(), targets.as_ptr(), ptr::null(), seed, &mut m) };
        assert_eq!(status, KgStatus::Ok, "{}", last_error());
        let mut json = ptr::null_mut();
        assert_eq!(unsafe { kg_motion_to_json(m, &mut json) }, KgStatus::Ok);
        assert_eq!(unsafe { kg_motion_frames(m) }, 16);
        unsafe { kg_motion_free(m) };
        take_string(json)
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));

    let bad = CString::new(r#"{"guidance": {"mode": "sideways"}}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_generate(ck, prompt.as_ptr(), ptr::null(), bad.as_ptr(), 0, &mut m) }, KgStatus::Invalid);
    unsafe { kg_checkpoint_free(ck) };
}

#[test]
fn interact_fills_one_handle_per_agent() {
    let ck = load_checkpoint();
    let text = CString::new(PLAN).unwrap();
    let mut plans = ptr::null_mut();
    assert_eq!(unsafe { kg_plans_parse(text.as_ptr(), &mut plans) }, KgStatus::Ok);

    let mut written = 0;
    let mut one = [ptr::null_mut(); 1];
    let status = unsafe { kg_interact(ck, plans, 0, ptr::null(), 3, one.as_mut_ptr(), 1, &mut written) };
    assert_eq!(status, KgStatus::BufferTooSmall);
    assert_eq!(written, 2);
    assert!(one[0].is_null());

    let mut out = [ptr::null_mut(); 2];
    let status = unsafe { kg_interact(ck, plans, 0, ptr::null(), 3, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(status, KgStatus::Ok, "{}", last_error());
    let origins: Vec<KgOrigin> = out.iter().map(|m| unsafe { kg_motion_origin(*m) }).collect();
    let gap = ((origins[0].x - origins[1].x).powi(2) + (origins[0].z - origins[1].z).powi(2)).sqrt();
    assert!((gap - 2.0).abs() < 1e-9);
    for m in out {
        assert_eq!(unsafe { kg_motion_frames(m) }, 16);
        unsafe { kg_motion_free(m) };
    }

    let status = unsafe { kg_interact(ck, plans, 5, ptr::null(), 3, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(status, KgStatus::Invalid);
    unsafe {
        kg_plans_free(plans);
        kg_checkpoint_free(ck);
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kinguide.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "kg_version", "kg_last_error", "kg_motion_from_json", "kg_forward_kinematics", "kg_generate", "kg_plans_validate",
        "kg_interact",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    for (compiler, file, src) in [
        ("cc", "check.c", "#include \"kinguide.h\"\nint main(void) { return kg_version() == NULL; }\n"),
        ("c++", "check.cpp", "#include \"kinguide.h\"\nint main() { return kg_version() == nullptr; }\n"),
    ] {
        let path = dir.path().join(file);
        std::fs::write(&path, src).unwrap();
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(header.parent().unwrap())
            .arg(&path)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not available; skipped"),
        }
    }
}
