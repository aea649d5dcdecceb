//! Relative motion representation and forward kinematics.
//!
//! A [`MotionSequence`] stores per-frame features in the root-relative layout
//! described by [`FeatureLayout`]. [`forward_kinematics`] integrates the root
//! velocities and places the root-space joint positions in the world,
//! producing a [`GlobalPose`]. [`to_relative`] goes the other way and is what
//! the synthetic data pipeline uses to build training features.

mod fk;
pub mod io;
mod layout;
mod normals;
mod relative;

pub use fk::{forward_kinematics, forward_kinematics_from, fk_backward};
pub use layout::FeatureLayout;
pub use normals::{body_normals, body_normals_lenient, BodyNormals};
pub use io::{MotionFile, DEFAULT_FPS};
pub use relative::{to_relative, CONTACT_HEIGHT, CONTACT_SPEED};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Motion features, `frames x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frames: usize,
    dim: usize,
    data: Vec<f64>,
}

impl MotionSequence {
    pub fn new(frames: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 {
            return Err(Error::InvalidArgument("motion needs at least one frame".into()));
        }
        if data.len() != frames * dim {
            return Err(Error::DimensionMismatch {
                what: "motion buffer length",
                expected: frames * dim,
                got: data.len(),
            });
        }
        Ok(Self { frames, dim, data })
    }

    pub fn zeros(frames: usize, dim: usize) -> Self {
        Self {
            frames,
            dim,
            data: vec![0.0; frames * dim],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.frames == other.frames && self.dim == other.dim
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// World-space joint positions, `frames x joints`, meters, Y up.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPose {
    frames: usize,
    joints: usize,
    positions: Vec<Vec3>,
}

impl GlobalPose {
    pub fn new(frames: usize, joints: usize, positions: Vec<Vec3>) -> Result<Self> {
        if positions.len() != frames * joints {
            return Err(Error::DimensionMismatch {
                what: "pose buffer length",
                expected: frames * joints,
                got: positions.len(),
            });
        }
        Ok(Self {
            frames,
            joints,
            positions,
        })
    }

    pub fn zeros(frames: usize, joints: usize) -> Self {
        Self {
            frames,
            joints,
            positions: vec![[0.0; 3]; frames * joints],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    #[inline]
    pub fn get(&self, frame: usize, joint: usize) -> Vec3 {
        self.positions[frame * self.joints + joint]
    }

    #[inline]
    pub fn set(&mut self, frame: usize, joint: usize, p: Vec3) {
        self.positions[frame * self.joints + joint] = p;
    }

    pub fn frame(&self, n: usize) -> &[Vec3] {
        &self.positions[n * self.joints..(n + 1) * self.joints]
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.positions
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().flatten().all(|v| v.is_finite())
    }

    /// Largest per-coordinate absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .fold(0.0, f64::max)
    }
}

/// World placement of the first frame: ground-plane position and facing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RootOrigin {
    pub x: f64,
    pub z: f64,
    pub yaw: f64,
}
