use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::interaction::plan::{DEFAULT_FPS, DEFAULT_FRAMES};
use crate::skeleton::DEFAULT_JOINT_NAMES;

/// Scenario facts given to the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Background {
    pub joints: Vec<String>,
    pub frames: usize,
    pub fps: f64,
    pub people: usize,
    pub height: f64,
    pub arm_length: f64,
    pub leg_length: f64,
    pub initial_separation: f64,
    /// Plan text shown as the worked example.
    pub example_plan: String,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            joints: DEFAULT_JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
            frames: DEFAULT_FRAMES,
            fps: DEFAULT_FPS,
            people: 2,
            height: 1.8,
            arm_length: 0.6,
            leg_length: 0.9,
            initial_separation: 2.0,
            example_plan: EXAMPLE_PLAN.to_string(),
        }
    }
}

const HEADER: &str = "Given the instruction, generate 10 task plans according to the following background information, rules, and examples. Each task plan should completely reflect an entire process of actions described in the instruction.";

pub const RULES: &str = "[start of rules]
1. Each task plan should be composite into detailed steps.
2. Each step should contain meaningful joint-joint pairs.
3. Each joint-joint pair should be formatted into {JOINT, JOINT, TIME-STEP, TIME-STEP, CONTACT TYPE, DISTANCE}. JOINT should be replaced by JOINT in the background information. IMPORTANT: The first JOINT belongs to person 1, and the second JOINT belongs to person 2. Each joint-joint pair represents a contact of a joint of person 1 and a joint of person 2. The first TIME-STEP is the start frame number of contact, and the second TIME-STEP is the end frame number of contact. CONTACT TYPE should be selected from {contact, avoid}, DISTANCE should be a float number representing how many meters should be the distance of two joints in the joint-joint pair. For [CONTACT TYPE: contact], the distance of two joints should be SMALLER than the DISTANCE; for [CONTACT TYPE: avoid], the distance of two joints should be LARGER than the DISTANCE. IMPORTANT: Consider the transition of contact types, leave time-steps more than 20 frames without any joint-joint pair between different contact types. Use small DISTANCE variance between different contact types: for the joint-joint pairs that are with [CONTACT TYPE: contact], do NOT use DISTANCE larger than 0.5m in the following [CONTACT TYPE: avoid]; for the joint-joint pairs that are with [CONTACT TYPE: contact], use [CONTACT TYPE: avoid] after 20 frames; for the joint-joint pairs that are with [CONTACT TYPE: avoid], use NO joint pairs for 20 frames if the following CONTACT TYPE is contact. Try to not over-use [CONTACT TYPE: avoid]: if there is no explicit semantics of being far away, just do not use joint-joint pair in that frames; if there is explicit semantics of being far away, then use joint-joint pair with [CONTACT TYPE: avoid].
4. Consider which JOINT will be interacted when two people perform the action described in the text instruction. Translate the text instruction to be steps of joint-joint pairs. Do not include extra joint-joint pairs that is unrelated to the text instruction. IMPORTANT: make joint-joint pairs in different task plans diverse in TIME-STEPS and JOINTs. Each joint-joint contact pairs should be lasting from 3 to 10 frames.
5. Be plausible. Do not generate uncommon interactions. Generate plausible interaction time-steps, and consider the velocity of human motions.
6. Use one sentence to describe what action should person 1 do and one sentence to describe what action should person 2 do according to the text instruction at the beginning of the task plan. IMPORTANT: the sentence starts from 'text 1:' describing the action of person 1 from the perspective of person 1 and the sentence starts from 'text 2:' describing the action of person 2 from the perspective of person 2. Sentences should NOT contain words like 'person 1' or 'person 2', use 'a person' to refer to himself in the sentence and 'others' to refer to others.
7. The steps in the task plan are for both two people. Use one set of steps to describe both two people. The first JOINT belongs to person 1, and the second JOINT belongs to person 2.
8. IMPORTANT: Do NOT add explanations for the steps in task plans. Each step only have one joint-joint pairs.
[end of rules]";

pub const EXAMPLE_PLAN: &str = "[Start of Plan 1]
Text 1: a person make a handshake with others using his right wrist, while holding his cards in the left wrist.
Text 2: a person make a handshake with others using his right wrist, while holding his cards in the left wrist.
Step 1: {right wrist, right wrist, 0, 10, avoid, 0.3}
Step 2: {right wrist, right wrist, 50, 60, contact, 0.05}
Step 3: {right wrist, right wrist, 90, 100, avoid, 0.3}
[End of Plan 1]";

/// Builds the planner prompt: instruction, background, rules, example.
/// Output is byte-stable for identical inputs.
pub fn render_prompt(instruction: &str, background: &Background) -> Result<String> {
    let instruction = instruction.trim();
    if instruction.is_empty() {
        return Err(Error::InvalidArgument("planner instruction is empty".into()));
    }
    let joints = background
        .joints
        .iter()
        .map(|j| format!("'{j}'"))
        .collect::<Vec<_>>()
        .join(", ");
    let people = match background.people {
        2 => "two people".to_string(),
        n => format!("{n} people"),
    };
    let mut out = String::new();
    out.push_str(&format!("Instruction: {instruction}\n"));
    out.push_str(HEADER);
    out.push('\n');
    out.push_str("[start of background Information]\n");
    out.push_str(&format!("Human has JOINTS: [{joints}].\n"));
    out.push_str(&format!(
        "The total number of TIME-STEPS of human motion is {}, the frame-per-second of motion is {}.\n",
        background.frames, background.fps
    ));
    out.push_str(&format!(
        "The provided text instruction is describing {people} performing some actions containing human joint contacts.\n"
    ));
    out.push_str(&format!(
        "The height of all people is {} meters, the arm length is {} meters, and the leg length is {} meters.\n",
        background.height, background.arm_length, background.leg_length
    ));
    let cap = people[..1].to_uppercase() + &people[1..];
    out.push_str(&format!(
        "{cap} are {} meters away at the beginning (i.e., TIME-STEPS=0).\n",
        background.initial_separation
    ));
    out.push_str("[end of background Information]\n");
    out.push_str(RULES);
    out.push('\n');
    out.push_str("[start of an example]\n");
    out.push_str(&format!("Instruction: {instruction}\n"));
    out.push_str(background.example_plan.trim());
    out.push('\n');
    out.push_str("[end of an example]\n");
    Ok(out)
}

/// Hex SHA-256 of the fixed template text.
pub fn template_hash() -> String {
    let mut h = Sha256::new();
    h.update(HEADER.as_bytes());
    h.update(RULES.as_bytes());
    h.update(EXAMPLE_PLAN.as_bytes());
    hex::encode(h.finalize())
}
