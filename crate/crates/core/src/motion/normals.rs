use super::GlobalPose;
use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use crate::skeleton::Skeleton;

/// Per-frame unit normals of the shoulder and hip triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyNormals {
    pub shoulders: Vec<Vec3>,
    pub hips: Vec<Vec3>,
}

/// Shoulder normal: (left_shoulder - pelvis) x (right_shoulder - pelvis).
/// Hip normal: (right_hip - pelvis) x (left_hip - pelvis), since the hips sit
/// below the pelvis. Both point the way the body faces: +Z for the rest pose.
fn raw_normals(pose: &GlobalPose, skeleton: &Skeleton, n: usize) -> (Vec3, Vec3) {
    let s = skeleton.special();
    let p = pose.get(n, s.root);
    let ls = math::sub(pose.get(n, s.left_shoulder), p);
    let rs = math::sub(pose.get(n, s.right_shoulder), p);
    let lh = math::sub(pose.get(n, s.left_hip), p);
    let rh = math::sub(pose.get(n, s.right_hip), p);
    (math::cross(ls, rs), math::cross(rh, lh))
}

pub fn body_normals(pose: &GlobalPose, skeleton: &Skeleton) -> Result<BodyNormals> {
    let mut shoulders = Vec::with_capacity(pose.frames());
    let mut hips = Vec::with_capacity(pose.frames());
    for n in 0..pose.frames() {
        let (s, h) = raw_normals(pose, skeleton, n);
        let s = math::normalize(s).ok_or(Error::DegenerateFrame {
            frame: n,
            what: "collinear pelvis/shoulder triangle",
        })?;
        let h = math::normalize(h).ok_or(Error::DegenerateFrame {
            frame: n,
            what: "collinear pelvis/hip triangle",
        })?;
        shoulders.push(s.0);
        hips.push(h.0);
    }
    Ok(BodyNormals { shoulders, hips })
}

/// Like [`body_normals`] but yields a zero vector for degenerate frames.
/// Used when building conditions from noisy intermediate samples.
pub fn body_normals_lenient(pose: &GlobalPose, skeleton: &Skeleton) -> BodyNormals {
    let mut shoulders = Vec::with_capacity(pose.frames());
    let mut hips = Vec::with_capacity(pose.frames());
    for n in 0..pose.frames() {
        let (s, h) = raw_normals(pose, skeleton, n);
        shoulders.push(math::normalize(s).map(|u| u.0).unwrap_or([0.0; 3]));
        hips.push(math::normalize(h).map(|u| u.0).unwrap_or([0.0; 3]));
    }
    BodyNormals { shoulders, hips }
}
