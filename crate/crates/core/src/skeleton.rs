//! Joint hierarchy and rest pose.
//!
//! The default table follows the 22-joint ordering used by HumanML3D-style
//! data, so plan files that address joints by index (for example `11` for
//! the right foot and `21` for the right wrist) resolve to the same joints.
//! The rest pose is a T-pose facing world +Z with Y up; the character's left
//! side is at +X.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Vec3};

pub const DEFAULT_JOINT_NAMES: [&str; 22] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

const DEFAULT_PARENTS: [Option<usize>; 22] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
];

const DEFAULT_OFFSETS: [Vec3; 22] = [
    [0.0, 0.0, 0.0],
    [0.09, -0.07, 0.0],
    [-0.09, -0.07, 0.0],
    [0.0, 0.10, -0.01],
    [0.0, -0.40, 0.0],
    [0.0, -0.40, 0.0],
    [0.0, 0.12, 0.0],
    [0.0, -0.42, -0.02],
    [0.0, -0.42, -0.02],
    [0.0, 0.05, 0.01],
    [0.0, -0.045, 0.14],
    [0.0, -0.045, 0.14],
    [0.0, 0.20, -0.01],
    [0.07, 0.12, 0.0],
    [-0.07, 0.12, 0.0],
    [0.0, 0.12, 0.04],
    [0.10, 0.02, 0.0],
    [-0.10, 0.02, 0.0],
    [0.29, 0.0, 0.0],
    [-0.29, 0.0, 0.0],
    [0.27, 0.0, 0.0],
    [-0.27, 0.0, 0.0],
];

/// Indices of joints with a dedicated role in kinematics and losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialJoints {
    pub root: usize,
    pub left_hip: usize,
    pub right_hip: usize,
    pub left_shoulder: usize,
    pub right_shoulder: usize,
    pub left_ankle: usize,
    pub right_ankle: usize,
    pub left_foot: usize,
    pub right_foot: usize,
    pub head: usize,
}

impl SpecialJoints {
    fn all(&self) -> [usize; 10] {
        [
            self.root,
            self.left_hip,
            self.right_hip,
            self.left_shoulder,
            self.right_shoulder,
            self.left_ankle,
            self.right_ankle,
            self.left_foot,
            self.right_foot,
            self.head,
        ]
    }

    /// Foot joints in the order used by the foot-contact features.
    pub fn feet(&self) -> [usize; 4] {
        [self.left_ankle, self.left_foot, self.right_ankle, self.right_foot]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    joint_names: Vec<String>,
    parents: Vec<Option<usize>>,
    rest_offsets: Vec<Vec3>,
    special: SpecialJoints,
    torso: Vec<usize>,
}

impl Default for Skeleton {
    fn default() -> Self {
        Self::new(
            DEFAULT_JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
            DEFAULT_PARENTS.to_vec(),
            DEFAULT_OFFSETS.to_vec(),
            SpecialJoints {
                root: 0,
                left_hip: 1,
                right_hip: 2,
                left_shoulder: 16,
                right_shoulder: 17,
                left_ankle: 7,
                right_ankle: 8,
                left_foot: 10,
                right_foot: 11,
                head: 15,
            },
            // pelvis, hips, spine chain, neck, collars, head
            vec![0, 1, 2, 3, 6, 9, 12, 13, 14, 15],
        )
        .expect("default skeleton is valid")
    }
}

impl Skeleton {
    pub fn new(
        joint_names: Vec<String>,
        parents: Vec<Option<usize>>,
        rest_offsets: Vec<Vec3>,
        special: SpecialJoints,
        torso: Vec<usize>,
    ) -> Result<Self> {
        let j = joint_names.len();
        if parents.len() != j {
            return Err(Error::DimensionMismatch {
                what: "parent table length",
                expected: j,
                got: parents.len(),
            });
        }
        if rest_offsets.len() != j {
            return Err(Error::DimensionMismatch {
                what: "rest offset table length",
                expected: j,
                got: rest_offsets.len(),
            });
        }
        let idx = special.all();
        if idx.iter().any(|&i| i >= j) {
            return Err(Error::InvalidArgument("special joint index out of range".into()));
        }
        for (a, &x) in idx.iter().enumerate() {
            if idx[a + 1..].contains(&x) {
                return Err(Error::InvalidArgument(format!("special joint {x} used twice")));
            }
        }
        if parents[special.root].is_some() {
            return Err(Error::InvalidArgument("root joint must not have a parent".into()));
        }
        if rest_offsets[special.root] != [0.0; 3] {
            return Err(Error::InvalidArgument("root rest offset must be zero".into()));
        }
        // every joint must reach the root without cycles; parents precede children
        for (i, p) in parents.iter().enumerate() {
            match p {
                None if i != special.root => {
                    return Err(Error::InvalidArgument(format!("joint {i} has no parent")))
                }
                Some(p) if *p >= i => {
                    return Err(Error::InvalidArgument(format!(
                        "joint {i} must come after its parent {p}"
                    )))
                }
                _ => {}
            }
        }
        if special.root != 0 {
            return Err(Error::InvalidArgument("root must be joint 0".into()));
        }
        if torso.iter().any(|&t| t >= j) {
            return Err(Error::InvalidArgument("torso joint index out of range".into()));
        }
        Ok(Self {
            joint_names,
            parents,
            rest_offsets,
            special,
            torso,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn rest_offsets(&self) -> &[Vec3] {
        &self.rest_offsets
    }

    pub fn special(&self) -> &SpecialJoints {
        &self.special
    }

    /// Joints used for torso separation between characters.
    pub fn torso(&self) -> &[usize] {
        &self.torso
    }

    pub fn children(&self, joint: usize) -> impl Iterator<Item = usize> + '_ {
        self.parents
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == Some(joint))
            .map(|(i, _)| i)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Resolves a loosely written joint name: case-insensitive, with spaces,
    /// dashes and underscores treated alike (`"Right Wrist"` -> `right_wrist`).
    pub fn resolve_joint_name(&self, name: &str) -> Option<usize> {
        let key = fold_joint_name(name);
        self.joint_names.iter().position(|n| fold_joint_name(n) == key)
    }

    /// Rest-pose joint positions relative to the root.
    pub fn rest_positions(&self) -> Vec<Vec3> {
        let mut out = vec![[0.0; 3]; self.joint_count()];
        for j in 1..self.joint_count() {
            let p = self.parents[j].expect("non-root has parent");
            out[j] = math::add(out[p], self.rest_offsets[j]);
        }
        out
    }

    /// Root height at which the lowest rest-pose joint touches the ground.
    pub fn rest_root_height(&self) -> f64 {
        let min_y = self
            .rest_positions()
            .iter()
            .map(|p| p[1])
            .fold(f64::INFINITY, f64::min);
        -min_y
    }

    pub fn bone_length(&self, joint: usize) -> f64 {
        math::norm(self.rest_offsets[joint])
    }
}

pub(crate) fn fold_joint_name(name: &str) -> String {
    name.trim()
        .chars()
        .filter_map(|c| match c {
            ' ' | '-' | '_' => Some('_'),
            c if c.is_alphanumeric() => Some(c.to_ascii_lowercase()),
            _ => None,
        })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}
