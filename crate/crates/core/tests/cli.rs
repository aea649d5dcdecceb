//! End-to-end runs of the `kinguide` binary on a tiny model.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use common::fixture;
use kinguide::cli::SampleRecord;
use kinguide::config::{read_json, TargetsFile};
use kinguide::motion::MotionFile;
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kinguide"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn kinguide")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "kinguide {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn data(&self) -> PathBuf {
        self.root.join("data")
    }
    fn ckpt(&self) -> PathBuf {
        self.root.join("ckpt")
    }
}

/// Dataset plus a tiny denoiser and ControlNet, built once per test binary.
fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let spec = root.join("spec.json");
        write(&spec, &json!({"tasks": ["walk", "reach", "stand", "turn"], "count": 8, "frames": 16, "seed": 3}));
        ok(&["data", "gen", "--spec", s(&spec), "--out", s(&root.join("data"))]);
        let model = json!({"layers": 1, "width": 16, "heads": 2, "ff": 32});
        let dcfg = root.join("denoiser.json");
        write(
            &dcfg,
            &json!({"model": model, "diffusion_steps": 8, "train": {"steps": 3, "batch_size": 4, "lr": 1e-3}}),
        );
        ok(&[
            "train", "denoiser", "--data", s(&root.join("data")), "--config", s(&dcfg), "--out", s(&root.join("ckpt")),
        ]);
        let ccfg = root.join("controlnet.json");
        write(&ccfg, &json!({"train": {"train": {"steps": 2, "batch_size": 4}, "guidance_iterations": 1}}));
        ok(&[
            "train",
            "controlnet",
            "--data",
            s(&root.join("data")),
            "--config",
            s(&ccfg),
            "--base",
            s(&root.join("ckpt")),
            "--out",
            s(&root.join("ckpt")),
        ]);
        Workspace { _dir: dir, root }
    })
}

#[test]
fn data_gen_writes_manifest_and_run_record() {
    let ws = workspace();
    assert!(ws.data().join("manifest.json").exists());
    assert!(ws.data().join("stats.json").exists());
    let run: Value = serde_json::from_str(&std::fs::read_to_string(ws.data().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "data gen");
    assert_eq!(run["seeds"][0], 3);
}

#[test]
fn checkpoint_records_both_trainings() {
    let ws = workspace();
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(ws.ckpt().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["controlnet_hash"].is_string());
    assert_eq!(manifest["training"]["denoiser"]["diffusion_steps"], 8);
    assert_eq!(manifest["training"]["controlnet"]["train"]["guidance_iterations"], 1);
}

#[test]
fn empty_targets_match_plain_sampling() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("empty.json");
    write(&targets, &json!({"frames": 16, "targets": []}));
    let guided = dir.path().join("guided.json");
    ok(&[
        "generate", "--ckpt", s(&ws.ckpt()), "--prompt", "walk", "--targets", s(&targets), "--seed", "9", "--out",
        s(&guided),
    ]);
    let plain_cfg = dir.path().join("plain.json");
    write(&plain_cfg, &json!({"use_controlnet": false, "guidance": {"weights": {"contact": 0.0}}}));
    let plain = dir.path().join("plain_motion.json");
    ok(&[
        "generate", "--ckpt", s(&ws.ckpt()), "--prompt", "walk", "--frames", "16", "--config", s(&plain_cfg),
        "--seed", "9", "--out", s(&plain),
    ]);
    let a = MotionFile::read(&guided).unwrap();
    let b = MotionFile::read(&plain).unwrap();
    let bits = |m: &MotionFile| m.motion.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert!(dir.path().join("guided.run.json").exists());
    assert!(dir.path().join("guided.sample.json").exists());
}

#[test]
fn same_manifest_inputs_reproduce_outputs() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("t.json");
    write(
        &targets,
        &json!({"frames": 16, "targets": [
            {"frame": 0, "joint": "pelvis", "position": [0.0, 0.9, 0.0]},
            {"frame": 15, "joint": "pelvis", "position": [0.0, 0.9, 1.0], "axes": [true, false, true]}]}),
    );
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        ok(&[
            "generate", "--ckpt", s(&ws.ckpt()), "--prompt", "walk", "--targets", s(&targets), "--mode", "on_x0",
            "--seed", "4", "--out", s(&out),
        ]);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let a: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.run.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.run.json")).unwrap()).unwrap();
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_eq!(a["inputs"], b["inputs"]);
}

#[test]
fn eval_of_a_perfect_match_is_all_zero() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    ok(&["generate", "--ckpt", s(&ws.ckpt()), "--prompt", "reach", "--frames", "16", "--seed", "1", "--out", s(&out)]);
    // targets read back from the generated motion itself
    let skel = kinguide::skeleton::Skeleton::default();
    let m = MotionFile::read(&out).unwrap();
    let pose = kinguide::motion::forward_kinematics(&m.motion, &skel).unwrap();
    let mut cond = kinguide::guidance::SpatialCondition::new(16, 22);
    for n in 0..16 {
        for j in [0, 20, 21] {
            cond.set(n, j, pose.get(n, j), 0.0, kinguide::interaction::Relation::Contact).unwrap();
        }
    }
    let record_path = dir.path().join("m.sample.json");
    let mut record: SampleRecord = read_json(&record_path).unwrap();
    record.targets = TargetsFile::from_condition(&cond, Default::default());
    std::fs::write(&record_path, serde_json::to_string(&record).unwrap()).unwrap();

    let report = dir.path().join("report.json");
    ok(&["eval", "--generated", s(dir.path()), "--threshold", "0.5", "--report", s(&report)]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["traj_err"], 0.0);
    assert_eq!(r["loc_err"], 0.0);
    assert!(r["avg_err"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["n_samples"], 1);
    assert_eq!(r["thresholds"]["trajectory"], 0.5);
}

#[test]
fn interact_writes_agents_report_and_scene() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    write(
        &plan,
        &json!({"text_person1": "a person reaches out", "text_person2": "a person reaches out", "frames": 16,
                "steps": [[21, 21, 8, 12, 1, 0.05]]}),
    );
    let out = dir.path().join("run");
    ok(&["interact", "--plan", s(&plan), "--ckpt", s(&ws.ckpt()), "--seed", "2", "--out", s(&out)]);
    for f in ["agent0.json", "agent1.json", "agent0.sample.json", "report.json", "scene.json", "run.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["agents"], 2);
    assert_eq!(report["steps"][0]["relation"], "contact");
    let eval = dir.path().join("eval.json");
    ok(&["eval", "--generated", s(&out), "--threshold", "0.2", "--report", s(&eval)]);
    let scene = dir.path().join("scene.csv");
    ok(&[
        "export",
        "--motion",
        s(&out.join("agent0.json")),
        "--motion",
        s(&out.join("agent1.json")),
        "--format",
        "csv",
        "--out",
        s(&scene),
    ]);
    assert_eq!(std::fs::read_to_string(&scene).unwrap().lines().count(), 1 + 2 * 16);
}

#[test]
fn export_formats() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let motion = dir.path().join("m.json");
    ok(&["generate", "--ckpt", s(&ws.ckpt()), "--prompt", "turn", "--frames", "16", "--seed", "5", "--out", s(&motion)]);
    for (format, file) in [("bvh", "m.bvh"), ("csv", "m.csv"), ("viewer-json", "m.viewer.json")] {
        let out = dir.path().join(file);
        ok(&["export", "--motion", s(&motion), "--format", format, "--out", s(&out)]);
        let text = std::fs::read_to_string(&out).unwrap();
        match format {
            "bvh" => {
                assert!(text.starts_with("HIERARCHY"));
                assert!(text.contains("Frames: 16"));
            }
            "csv" => assert_eq!(text.lines().count(), 17),
            _ => {
                let v: Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["tracks"][0]["positions"].as_array().unwrap().len(), 16);
            }
        }
    }
    let bad = run(&["export", "--motion", s(&motion), "--format", "fbx", "--out", s(&dir.path().join("x"))]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_errors_exit_1_with_json_path() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(&cfg, &json!({"guidance": {"weights": {"contact": "heavy"}}}));
    let out = run(&[
        "generate", "--ckpt", s(&ws.ckpt()), "--prompt", "walk", "--config", s(&cfg), "--out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("guidance.weights.contact"), "{err}");

    write(&cfg, &json!({"tasks": ["walk"], "count": 2, "frames": 1, "seed": 0}));
    let out = run(&["data", "gen", "--spec", s(&cfg), "--out", s(&dir.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(run(&["generate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate", "--ckpt", s(&dir.path().join("nope")), "--prompt", "walk", "--out", s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_fetch_from_fixture_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plans.json");
    ok(&[
        "plan",
        "fetch",
        "--instruction",
        "two people fence",
        "--fixture",
        s(&fixture("plans/fencing_reply.txt")),
        "--out",
        s(&out),
    ]);
    let plans: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(plans.as_array().unwrap().len(), 5);
    assert!(dir.path().join("plans.raw.txt").exists());
    ok(&["plan", "validate", "--plans", s(&fixture("plans/library.json"))]);

    let bad = dir.path().join("bad.json");
    write(
        &bad,
        &json!([{"text_person1": "a person waves", "text_person2": "a person waves", "steps": [[21, 40, 5, 10, 1, 0.1]]}]),
    );
    let out = run(&["plan", "validate", "--plans", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown-joint"));
}

#[test]
fn plan_fetch_failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let missing = run(&[
        "plan", "fetch", "--instruction", "hug", "--fixture", s(&dir.path().join("none.txt")), "--out", s(&out),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "no plans here").unwrap();
    let none = run(&["plan", "fetch", "--instruction", "hug", "--fixture", s(&empty), "--out", s(&out)]);
    assert_eq!(none.status.code(), Some(1));

    let cfg = dir.path().join("endpoint.json");
    write(&cfg, &json!({"max_attempts": 1, "timeout_secs": 2, "backoff_ms": 0}));
    let unreachable = bin()
        .args([
            "plan",
            "fetch",
            "--instruction",
            "hug",
            "--endpoint",
            "http://127.0.0.1:9/v1/chat/completions",
            "--endpoint-config",
            s(&cfg),
            "--out",
            s(&out),
        ])
        .env("KINGUIDE_PLANNER_KEY", "test")
        .output()
        .unwrap();
    assert_eq!(unreachable.status.code(), Some(3), "{}", String::from_utf8_lossy(&unreachable.stderr));
}
