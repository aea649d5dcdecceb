use std::ops::Range;

use crate::error::{Error, Result};

/// Offsets of each feature group inside a motion frame.
///
/// Per frame: root angular velocity about Y (1), root linear velocity in the
/// ground plane, expressed in the root frame (2), root height (1), root-space
/// positions of the non-root joints (3(J-1)), root-space velocities of all
/// joints (3J), 6-component rotations of the non-root joints (6(J-1)) and
/// four foot-contact labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    joints: usize,
}

impl FeatureLayout {
    pub const ROOT_YAW_VEL: usize = 0;
    pub const ROOT_VEL_X: usize = 1;
    pub const ROOT_VEL_Z: usize = 2;
    pub const ROOT_HEIGHT: usize = 3;

    pub fn new(joints: usize) -> Self {
        assert!(joints >= 2, "a skeleton needs at least two joints");
        Self { joints }
    }

    /// Layout whose feature dimension equals `dim`, if any.
    pub fn from_dim(dim: usize) -> Option<Self> {
        // dim = 12J - 1
        if (dim + 1) % 12 == 0 && dim >= 23 {
            Some(Self::new((dim + 1) / 12))
        } else {
            None
        }
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn dim(&self) -> usize {
        let j = self.joints;
        1 + 2 + 1 + 3 * (j - 1) + 3 * j + 6 * (j - 1) + 4
    }

    /// Root-space position of non-root joint `joint` (1-based over joints).
    pub fn local_position(&self, joint: usize) -> Range<usize> {
        debug_assert!(joint >= 1 && joint < self.joints);
        let start = 4 + 3 * (joint - 1);
        start..start + 3
    }

    pub fn velocities(&self) -> Range<usize> {
        let start = 4 + 3 * (self.joints - 1);
        start..start + 3 * self.joints
    }

    pub fn velocity(&self, joint: usize) -> Range<usize> {
        let start = self.velocities().start + 3 * joint;
        start..start + 3
    }

    pub fn rotations(&self) -> Range<usize> {
        let start = self.velocities().end;
        start..start + 6 * (self.joints - 1)
    }

    pub fn rotation(&self, joint: usize) -> Range<usize> {
        debug_assert!(joint >= 1);
        let start = self.rotations().start + 6 * (joint - 1);
        start..start + 6
    }

    pub fn foot_contacts(&self) -> Range<usize> {
        let start = self.rotations().end;
        start..start + 4
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "motion feature dimension",
                expected: self.dim(),
                got: dim,
            });
        }
        Ok(())
    }
}
