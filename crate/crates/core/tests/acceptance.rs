//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Criteria 5, 6, 7 and 9 share one set of desk-scale models trained at the
//! start of the run. Set `KINGUIDE_ACCEPTANCE_CACHE=<dir>` to keep them
//! between runs.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use candle_core::{DType, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bits, corpus, desk_models, fixture, DeskModels, DeskRecipe, FRAMES};
use kinguide::generate::{generate, GenerateOptions, SampleRequest};
use kinguide::guidance::{
    contact_loss, joint_distance, masked_distance, GuidanceConfig, GuidanceProblem, LossWeights, Rect,
    SpatialCondition,
};
use kinguide::interaction::{
    agent_seeds, emit_plans, parse_plans, sample_interaction, ContactPlan, InteractionConfig, Relation,
};
use kinguide::metrics::{self, torso_distances, Thresholds};
use kinguide::models::{batch_tensor, ControlNet};
use kinguide::motion::{forward_kinematics, forward_kinematics_from, to_relative, GlobalPose, MotionSequence, RootOrigin};
use kinguide::optim::{gradient_descent, minimize, GdConfig, LbfgsConfig};
use kinguide::planner::{check_plan, fetch_plans, parse_plan_text, PlanSource, Rule};
use kinguide::skeleton::Skeleton;
use kinguide::synth::{sample_params, synthesize, Task};
use kinguide::Error;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let cache = std::env::var_os("KINGUIDE_ACCEPTANCE_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models"));
    let mut lines = Vec::new();
    let mut record = |id: usize, name: &str, o: Outcome| {
        let line = format!("criterion {id} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        println!("{line}");
        lines.push((o.pass, line));
    };

    record(1, "FK round trip", fk_round_trip());
    record(2, "guidance-loss oracle", loss_oracle());
    record(3, "gradient fidelity", gradient_fidelity());
    record(4, "optimizer", optimizer());
    record(8, "plan pipeline", plan_pipeline());

    let models = desk_models(DeskRecipe::default(), Some(&cache));
    println!(
        "desk models: training {:.0} s, denoiser loss {:.4} -> {:.4}",
        models.train_seconds, models.denoiser_losses.0, models.denoiser_losses.1
    );
    record(5, "desk-scale control quality", control_quality(&models));
    record(6, "zero-init equivalence", zero_init(&models));
    record(7, "interaction end to end", interaction(&models));
    record(9, "determinism and decoupling", determinism(&models));

    println!("\nsummary");
    let mut failed = 0;
    for (pass, line) in &lines {
        println!("{line}");
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn fk_round_trip() -> Outcome {
    let skel = Skeleton::default();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let task = Task::ALL[i % Task::ALL.len()];
        let p = sample_params(task, &mut rng);
        let frames = rng.gen_range(2..=96);
        let pose = synthesize(&p, &skel, frames, 20.0);
        let (m, origin) = to_relative(&pose, &skel).expect("to_relative");
        let back = forward_kinematics_from(&m, &skel, origin).expect("fk");
        worst = worst.max(pose.max_abs_diff(&back));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-5 && secs < 30.0,
        format!("max error {worst:.2e} m over 1000 sequences in {secs:.1} s (limits 1e-5 m, 30 s)"),
    )
}

fn random_motion(rng: &mut ChaCha8Rng, skel: &Skeleton, frames: usize) -> (MotionSequence, GlobalPose) {
    let task = Task::ALL[rng.gen_range(0..Task::ALL.len())];
    let p = sample_params(task, rng);
    let pose = synthesize(&p, skel, frames, 20.0);
    let (m, _) = to_relative(&pose, skel).unwrap();
    let world = forward_kinematics(&m, skel).unwrap();
    (m, world)
}

fn random_condition(rng: &mut ChaCha8Rng, pose: &GlobalPose) -> SpatialCondition {
    condition_with(rng, pose, |rng, relation| match relation {
        Relation::Contact | Relation::Avoid => (rng.gen_range(-0.5..0.5), rng.gen_range(0.0..0.4)),
    })
}

/// Every entry strictly violated and away from the hinge kink, so finite
/// differences see a smooth function.
fn active_condition(rng: &mut ChaCha8Rng, pose: &GlobalPose) -> SpatialCondition {
    condition_with(rng, pose, |rng, relation| {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match relation {
            Relation::Contact => (sign * rng.gen_range(0.15..0.5), rng.gen_range(0.0..0.05)),
            Relation::Avoid => (sign * rng.gen_range(0.02..0.1), rng.gen_range(0.4..0.6)),
        }
    })
}

/// Random entries; `draw` gives a per-axis target offset and the desired
/// distance for a relation.
fn condition_with(
    rng: &mut ChaCha8Rng,
    pose: &GlobalPose,
    draw: impl Fn(&mut ChaCha8Rng, Relation) -> (f64, f64),
) -> SpatialCondition {
    let (frames, joints) = (pose.frames(), pose.joints());
    let mut cond = SpatialCondition::new(frames, joints);
    let count = rng.gen_range(1..=frames * 3);
    for _ in 0..count {
        let n = rng.gen_range(0..frames);
        let j = rng.gen_range(0..joints);
        let relation = if rng.gen_bool(0.7) { Relation::Contact } else { Relation::Avoid };
        let p = pose.get(n, j);
        let mut target = p;
        let mut distance = 0.0;
        for t in &mut target {
            let (offset, d) = draw(rng, relation);
            *t += offset;
            distance = d;
        }
        let mut axes = [rng.gen_bool(0.7), rng.gen_bool(0.7), rng.gen_bool(0.7)];
        if !axes.iter().any(|a| *a) {
            axes[rng.gen_range(0..3)] = true;
        }
        cond.set_axes(n, j, target, axes, distance, relation).unwrap();
    }
    cond
}

/// `sum_{n,j,k} m * l_nj / sum m`, straight from the definition.
fn brute_force_loss(pose: &GlobalPose, cond: &SpatialCondition) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..pose.frames() {
        for j in 0..pose.joints() {
            let m = cond.mask(n, j);
            let p = pose.get(n, j);
            let c = cond.target(n, j);
            let mut sq = 0.0;
            for k in 0..3 {
                if m[k] {
                    sq += (c[k] - p[k]) * (c[k] - p[k]);
                }
            }
            let d = sq.sqrt();
            let l = match cond.relation(n, j) {
                Relation::Contact => (d - cond.distance(n, j)).max(0.0),
                Relation::Avoid => (cond.distance(n, j) - d).max(0.0),
            };
            for k in 0..3 {
                if m[k] {
                    num += l;
                    den += 1.0;
                }
            }
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn loss_oracle() -> Outcome {
    let skel = Skeleton::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let frames = rng.gen_range(1..=32);
        let (m, pose) = random_motion(&mut rng, &skel, frames.max(2));
        let cond = random_condition(&mut rng, &pose);
        let expected = brute_force_loss(&pose, &cond);
        let d = joint_distance(&pose, &cond).unwrap();
        let fast = contact_loss(&d, cond.distances(), cond.relations(), cond.masks());
        let problem = GuidanceProblem::single(&skel, None, &cond, RootOrigin::default());
        let through_problem = problem.loss(std::slice::from_ref(&m)).unwrap().total;
        worst = worst.max((fast - expected).abs()).max((through_problem - expected).abs());
    }
    outcome(worst < 1e-10, format!("max deviation {worst:.2e} over 100 instances (limit 1e-10)"))
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

fn finite_difference(problem: &GuidanceProblem, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    let mut g = vec![0.0; x.len()];
    let mut scratch = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = problem.evaluate(&xp, &mut scratch).unwrap().total;
        xp[i] = x[i] - h;
        let fm = problem.evaluate(&xp, &mut scratch).unwrap().total;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn gradient_fidelity() -> Outcome {
    let skel = Skeleton::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let frames = 4;
    let terms = ["contact", "orientation", "collision", "region"];
    let mut worst = [0.0f64; 4];
    for _ in 0..50 {
        let (ma, pa) = random_motion(&mut rng, &skel, frames);
        let (mb, _) = random_motion(&mut rng, &skel, frames);
        let oa = RootOrigin::default();
        let ob = RootOrigin {
            x: rng.gen_range(-0.2..0.2),
            z: rng.gen_range(0.1..0.3),
            yaw: rng.gen_range(2.5..3.8),
        };
        let cond = active_condition(&mut rng, &pa);
        for (t, term) in terms.iter().enumerate() {
            let mut problem = GuidanceProblem::single(&skel, None, &cond, oa);
            problem.agents.push(kinguide::guidance::AgentTerms {
                origin: ob,
                entries: Vec::new(),
            });
            problem.weights = LossWeights {
                contact: 0.0,
                orientation: 0.0,
                collision: 0.0,
                region: 0.0,
            };
            match *term {
                "contact" => problem.weights.contact = 1.0,
                "orientation" => {
                    problem.weights.orientation = 1.0;
                    problem.facing_pairs = vec![[0, 1]];
                }
                "collision" => {
                    problem.weights.collision = 1.0;
                    problem.collision_pairs = vec![[0, 1]];
                    problem.clearance = 0.5;
                }
                _ => {
                    problem.weights.region = 1.0;
                    problem.region = Some(Rect::new(-0.05, 0.05, -0.03, 0.02).unwrap());
                }
            }
            let x = problem.pack(&[ma.clone(), mb.clone()]).unwrap();
            let mut g = vec![0.0; x.len()];
            let value = problem.evaluate(&x, &mut g).unwrap().total;
            assert!(value > 0.0, "{term} instance is inactive");
            let fd = finite_difference(&problem, &x);
            worst[t] = worst[t].max(relative_error(&g, &fd));
        }
    }
    let pass = worst.iter().all(|w| *w < 1e-4);
    let detail = terms
        .iter()
        .zip(worst)
        .map(|(t, w)| format!("{t} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("max relative error over 50 instances: {detail} (limit 1e-4)"))
}

fn optimizer() -> Outcome {
    // quadratic with a known minimizer
    let center: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
    let scales: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
    let mut quad = |x: &[f64], g: &mut [f64]| {
        let mut f = 0.0;
        for i in 0..x.len() {
            let d = x[i] - center[i];
            f += 0.5 * scales[i] * d * d;
            g[i] = scales[i] * d;
        }
        f
    };
    let q = minimize(&mut quad, &[0.0; 10], &LbfgsConfig::default());
    let q_err = q.x.iter().zip(&center).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut rosen = |x: &[f64], g: &mut [f64]| {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    };
    let r = minimize(&mut rosen, &[-1.2, 1.0], &LbfgsConfig::with_iterations(500));
    let r_err = (r.x[0] - 1.0).abs().max((r.x[1] - 1.0).abs());

    // contact problems: L-BFGS against the best fixed-step descent
    let skel = Skeleton::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut lbfgs_evals = 0usize;
    let mut gd_evals = 0usize;
    for _ in 0..20 {
        let (m, pose) = random_motion(&mut rng, &skel, 32);
        let mut cond = SpatialCondition::new(32, 22);
        let joint = rng.gen_range(0..22);
        for n in (0..32).step_by(4) {
            let p = pose.get(n, joint);
            let c = [p[0] + rng.gen_range(-0.3..0.3), p[1], p[2] + rng.gen_range(-0.3..0.3)];
            cond.set(n, joint, c, 0.0, Relation::Contact).unwrap();
        }
        let problem = GuidanceProblem::single(&skel, None, &cond, RootOrigin::default());
        let x0 = problem.pack(std::slice::from_ref(&m)).unwrap();
        let mut f = |x: &[f64], g: &mut [f64]| problem.evaluate(x, g).unwrap().total;
        let l = minimize(&mut f, &x0, &LbfgsConfig::with_iterations(20));
        lbfgs_evals += l.evaluations;
        let budget = 20 * l.evaluations;
        let best = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]
            .iter()
            .map(|&step| {
                let r = gradient_descent(
                    &mut f,
                    &x0,
                    &GdConfig {
                        steps: budget,
                        step_size: step,
                        target: Some(l.f + 1e-9 * l.f.abs()),
                    },
                );
                if r.reached_target {
                    r.evaluations
                } else {
                    budget
                }
            })
            .min()
            .unwrap();
        gd_evals += best;
    }
    let ratio = gd_evals as f64 / lbfgs_evals as f64;
    outcome(
        q_err < 1e-6 && r_err < 1e-5 && ratio >= 10.0,
        format!(
            "quadratic error {q_err:.1e}, Rosenbrock error {r_err:.1e}, descent needs {ratio:.1}x the evaluations \
             ({gd_evals} vs {lbfgs_evals}; limit 10x)"
        ),
    )
}

fn rules_in(text: &str) -> Vec<Rule> {
    match parse_plans(text, 22) {
        Ok(plans) => plans.iter().flat_map(|p| check_plan(p, 22)).map(|d| d.rule).collect(),
        Err(Error::Validation(d)) => d.iter().map(|d| d.rule).collect(),
        Err(_) => vec![Rule::Syntax],
    }
}

fn plan_pipeline() -> Outcome {
    let skel = Skeleton::default();
    let mut problems = Vec::new();
    let path = fixture("plans/fencing_reply.txt");
    let raw = fetch_plans("", &PlanSource::Fixture(path.clone())).unwrap();
    if raw.as_bytes() != std::fs::read(&path).unwrap() {
        problems.push("fixture text not returned verbatim".to_string());
    }
    let parsed = parse_plan_text(&raw, &skel, 99, 20.0).unwrap();
    if parsed.plans.len() != 5 || !parsed.diagnostics.iter().all(|d| !d.is_error()) {
        problems.push(format!("expected 5 clean plans, got {}", parsed.plans.len()));
    }
    // Plan 1 in the JSON layout; the text's avoid window (20..30) is kept as written
    let first = &parsed.plans[0];
    let expected = [(11, 4, 5, 10, 1, 0.3), (21, 13, 20, 30, 0, 0.3), (18, 15, 70, 80, 1, 0.05)];
    let got: Vec<_> = first
        .steps
        .iter()
        .map(|s| (s.j1, s.j2, s.t_start, s.t_end, s.relation.code(), s.distance))
        .collect();
    if got != expected {
        problems.push(format!("plan 1 steps {got:?}"));
    }

    let json = emit_plans(&parsed.plans);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let schema_ok = value.as_array().is_some_and(|plans| {
        plans.iter().all(|p| {
            p["text_person1"].is_string()
                && p["text_person2"].is_string()
                && p["steps"]
                    .as_array()
                    .is_some_and(|s| s.iter().all(|st| st.as_array().is_some_and(|a| a.len() == 6)))
        })
    });
    if !schema_ok {
        problems.push("emitted JSON does not follow the plan schema".into());
    }
    let reparsed = parse_plans(&json, 22).unwrap();
    if reparsed != parsed.plans || emit_plans(&reparsed) != json {
        problems.push("parse/emit round trip is not idempotent".into());
    }
    for name in ["plans/library.json", "plans/handshake.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        match parse_plans(&text, 22) {
            Ok(plans) => {
                let diags: Vec<_> = plans.iter().flat_map(|p| check_plan(p, 22)).collect();
                if !diags.is_empty() {
                    problems.push(format!("{name}: {} diagnostics", diags.len()));
                }
            }
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }

    let p = |steps: &str| format!(r#"[{{"text_person1":"a person waves","text_person2":"a person waves","steps":{steps}}}]"#);
    let cases: Vec<(Rule, String)> = vec![
        (Rule::StepArity, p("[[1, 2, 3]]")),
        (Rule::UnknownJoint, p("[[25, 4, 5, 10, 1, 0.3]]")),
        (Rule::UnknownAgent, p("[[21, 21, 5, 10, 1, 0.1, 0, 4]]")),
        (Rule::FrameBounds, p("[[21, 21, 10, 5, 1, 0.1]]")),
        (Rule::RelationVocabulary, p("[[21, 21, 5, 10, 2, 0.1]]")),
        (Rule::Distance, p("[[21, 21, 5, 10, 1, -0.1]]")),
        (Rule::ConflictingOverlap, p("[[21, 21, 5, 10, 1, 0.1], [21, 15, 8, 12, 1, 0.3]]")),
        (Rule::StepDuration, p("[[21, 21, 5, 30, 1, 0.1]]")),
        (Rule::TransitionGap, p("[[21, 21, 5, 10, 1, 0.1], [21, 21, 15, 20, 0, 0.3]]")),
        (Rule::AvoidDistanceAfterContact, p("[[21, 21, 5, 10, 1, 0.1], [21, 21, 40, 48, 0, 0.8]]")),
        (
            Rule::MissingPrompt,
            r#"[{"text_person1":"a person waves","text_person2":"","steps":[]}]"#.into(),
        ),
        (
            Rule::PromptPerspective,
            r#"[{"text_person1":"person 1 waves","text_person2":"a person waves","steps":[]}]"#.into(),
        ),
        (Rule::Syntax, r#"[{"text_person1":"a person waves","steps":7}]"#.into()),
    ];
    let mut covered = 0;
    for (rule, text) in &cases {
        let found = rules_in(text);
        if found.contains(rule) {
            covered += 1;
        } else {
            problems.push(format!("{} not reported (got {found:?})", rule.code()));
        }
    }
    let clean = rules_in(&p("[[21, 21, 5, 10, 1, 0.1]]"));
    if !clean.is_empty() {
        problems.push(format!("clean plan flagged {clean:?}"));
    }
    let all_rules = Rule::ALL.iter().all(|r| cases.iter().any(|(c, _)| c == r));
    outcome(
        problems.is_empty() && all_rules,
        if problems.is_empty() {
            format!(
                "5 fixture plans match the JSON schema, round trip idempotent, {covered}/{} rules enforced",
                Rule::ALL.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn root_requests(models: &DeskModels) -> Vec<SampleRequest> {
    let skel = Skeleton::default();
    let held_out = corpus(64, FRAMES, 2);
    let vocab = &models.root.manifest.vocab;
    held_out
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let pose = forward_kinematics(&item.motion, &skel).unwrap();
            let mut cond = SpatialCondition::new(FRAMES, skel.joint_count());
            for n in 0..FRAMES {
                cond.set(n, 0, pose.get(n, 0), 0.0, Relation::Contact).unwrap();
            }
            SampleRequest {
                prompt: vocab.class_of(&item.label),
                condition: cond,
                seed: 1000 + i as u64,
            }
        })
        .collect()
}

fn control_quality(models: &DeskModels) -> Outcome {
    let skel = Skeleton::default();
    let requests = root_requests(models);
    let conds: Vec<SpatialCondition> = requests.iter().map(|r| r.condition.clone()).collect();
    let t = Thresholds::uniform(metrics::SINGLE_THRESHOLD);
    let start = Instant::now();
    let guided = generate(&models.root, &skel, &requests, &GenerateOptions::default()).expect("guided");
    let guided_secs = start.elapsed().as_secs_f64();
    let unguided = generate(&models.root, &skel, &requests, &GenerateOptions::unguided()).expect("unguided");
    let g = metrics::evaluate(&guided.poses, &conds, &skel, t).unwrap();
    let u = metrics::evaluate(&unguided.poses, &conds, &skel, t).unwrap();
    let beats = |gv: f64, uv: f64| uv > 0.0 && 5.0 * gv <= uv;
    let pass = g.avg_err <= 0.10
        && g.loc_err <= 0.05
        && models.train_seconds <= 1800.0
        && beats(g.traj_err, u.traj_err)
        && beats(g.loc_err, u.loc_err)
        && beats(g.avg_err, u.avg_err);
    outcome(
        pass,
        format!(
            "guided avg {:.4} m, loc {:.4}, traj {:.4}, skate {:.3}; unguided avg {:.4} m, loc {:.4}, traj {:.4}; \
             training {:.0} s, guided sampling {guided_secs:.0} s (limits avg 0.10, loc 0.05, 5x, 1800 s)",
            g.avg_err, g.loc_err, g.traj_err, g.foot_skate, u.avg_err, u.loc_err, u.traj_err, models.train_seconds
        ),
    )
}

fn zero_init(models: &DeskModels) -> Outcome {
    let ckpt = &models.root;
    let fresh = ControlNet::from_denoiser(&ckpt.denoiser, 99).unwrap();
    let data = corpus(4, FRAMES, 3);
    let x: Vec<MotionSequence> = data
        .motions()
        .iter()
        .map(|m| ckpt.manifest.stats.normalize(m).unwrap())
        .collect();
    let device = ckpt.denoiser.store().device().clone();
    let xt = batch_tensor(&x, &device).unwrap();
    let t = [3, 30, 60, 99];
    let prompts = [1, 2, 0, 3];
    let cond = Tensor::randn(0f32, 1.0, (4, FRAMES, ckpt.manifest.config.condition_dim()), &device).unwrap();
    let feats = fresh.forward(&xt, &t, &prompts, &cond).unwrap();
    let plain = ckpt.denoiser.forward(&xt, &t, &prompts, None).unwrap();
    let with = ckpt.denoiser.forward(&xt, &t, &prompts, Some(&feats)).unwrap();
    let to_bits = |v: &Tensor| -> Vec<u32> {
        v.to_dtype(DType::F32)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1::<f32>()
            .unwrap()
            .iter()
            .map(|f| f.to_bits())
            .collect()
    };
    let bitwise = to_bits(&plain) == to_bits(&with);
    let hashes_ok = models.frozen_hashes.iter().all(|(a, b)| a == b)
        && models.frozen_hashes.iter().all(|(a, _)| *a == ckpt.manifest.denoiser_hash);
    outcome(
        bitwise && hashes_ok,
        format!(
            "fresh ControlNet output bitwise equal: {bitwise}; frozen hash unchanged across {} ControlNet runs: {hashes_ok}",
            models.frozen_hashes.len()
        ),
    )
}

fn interaction(models: &DeskModels) -> Outcome {
    let skel = Skeleton::default();
    let text = std::fs::read_to_string(fixture("plans/handshake.json")).unwrap();
    let plan = parse_plans(&text, 22).unwrap().remove(0);
    let cfg = InteractionConfig::default();
    let start = Instant::now();
    let mut wrist = Vec::new();
    let mut poses = Vec::new();
    let mut conds = Vec::new();
    let mut torso = Vec::new();
    for seed in 0..16u64 {
        let out = sample_interaction(&plan, &models.joint, &skel, &cfg, &agent_seeds(seed, 2)).expect("interaction");
        for s in plan.steps.iter().filter(|s| s.relation == Relation::Contact) {
            for n in s.t_start..s.t_end {
                wrist.push(masked_distance(
                    out.poses[0].get(n, s.j1),
                    out.poses[1].get(n, s.j2),
                    [true; 3],
                ));
            }
        }
        torso.extend(torso_distances(&out.poses[0], &out.poses[1], &skel));
        conds.extend(out.realized_conditions().unwrap());
        poses.extend(out.poses);
    }
    let secs = start.elapsed().as_secs_f64();
    let mean_wrist = wrist.iter().sum::<f64>() / wrist.len() as f64;
    let traj = metrics::trajectory_error(&poses, &conds, metrics::INTERACTION_THRESHOLD).unwrap();
    let clear = torso.iter().filter(|d| **d >= 0.35).count() as f64 / torso.len() as f64;
    outcome(
        mean_wrist <= 0.07 && traj == 0.0 && clear >= 0.9 && secs <= 600.0,
        format!(
            "mean wrist distance {mean_wrist:.4} m, trajectory error (20 cm) {traj:.3}, torso >= 0.35 m on {:.1}% of \
             frames, {secs:.0} s for 16 seeds (limits 0.07 m, 0, 90%, 600 s)",
            100.0 * clear
        ),
    )
}

fn determinism(models: &DeskModels) -> Outcome {
    let skel = Skeleton::default();
    let requests: Vec<SampleRequest> = root_requests(models).into_iter().take(3).collect();
    let opts = GenerateOptions::default();
    let a = generate(&models.root, &skel, &requests, &opts).unwrap();
    let b = generate(&models.root, &skel, &requests, &opts).unwrap();
    let alone = generate(&models.root, &skel, &requests[1..2], &opts).unwrap();
    let rerun = bits(&a.motions) == bits(&b.motions);
    let split = bits(&a.motions[1..2]) == bits(&alone.motions);

    let plan = ContactPlan {
        frames: FRAMES,
        ..ContactPlan::two_person("a person walks", "a person turns around", Vec::new())
    };
    let cfg = InteractionConfig {
        guidance: Some(GuidanceConfig {
            weights: LossWeights::default(),
            ..GuidanceConfig::default()
        }),
        ..InteractionConfig::default()
    };
    let seeds = agent_seeds(5, 2);
    let multi = sample_interaction(&plan, &models.joint, &skel, &cfg, &seeds).unwrap();
    let vocab = &models.joint.manifest.vocab;
    let single: Vec<MotionSequence> = (0..2)
        .flat_map(|k| {
            let req = SampleRequest {
                prompt: vocab.class_of(&plan.prompts[k]),
                condition: SpatialCondition::new(FRAMES, 22),
                seed: seeds[k],
            };
            generate(&models.joint, &skel, &[req], &GenerateOptions::default()).unwrap().motions
        })
        .collect();
    let decoupled = bits(&multi.motions) == bits(&single);
    outcome(
        rerun && split && decoupled,
        format!("rerun identical: {rerun}; batch split identical: {split}; unconstrained two-agent run equals single runs: {decoupled}"),
    )
}
