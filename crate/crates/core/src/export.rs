//! Motion export: BVH, CSV of joint positions, and a JSON document for
//! external viewers.
//!
//! BVH uses the skeleton's rest offsets. The root carries translation and
//! yaw only; each other joint's rotation turns the rest offset of its first
//! child onto that child's bone in the exported positions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Mat3, Vec3};
use crate::motion::{forward_kinematics_from, FeatureLayout, GlobalPose, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Bvh,
    Csv,
    ViewerJson,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bvh" => Some(Self::Bvh),
            "csv" => Some(Self::Csv),
            "viewer-json" => Some(Self::ViewerJson),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Bvh => "bvh",
            Self::Csv => "csv",
            Self::ViewerJson => "json",
        }
    }
}

/// One motion placed in the world.
pub struct Track<'a> {
    pub name: String,
    pub motion: &'a MotionSequence,
    pub origin: RootOrigin,
}

pub fn export(tracks: &[Track], skel: &Skeleton, fps: f64, format: ExportFormat) -> Result<String> {
    if tracks.is_empty() {
        return Err(Error::InvalidArgument("nothing to export".into()));
    }
    match format {
        ExportFormat::Bvh => {
            if tracks.len() != 1 {
                return Err(Error::InvalidArgument("BVH holds a single skeleton; export tracks one at a time".into()));
            }
            to_bvh(tracks[0].motion, skel, tracks[0].origin, fps)
        }
        ExportFormat::Csv => to_csv(tracks, skel, fps),
        ExportFormat::ViewerJson => to_viewer_json(tracks, skel, fps),
    }
}

/// Yaw of every frame, integrated like forward kinematics does.
fn root_yaws(motion: &MotionSequence, origin: RootOrigin) -> Vec<f64> {
    let mut yaw = origin.yaw;
    (0..motion.frames())
        .map(|n| {
            let y = yaw;
            yaw += motion.row(n)[FeatureLayout::ROOT_YAW_VEL];
            y
        })
        .collect()
}

fn first_child(skel: &Skeleton, joint: usize) -> Option<usize> {
    skel.children(joint).min()
}

/// Euler angles (radians) with `m = Rz(z) * Rx(x) * Ry(y)`.
pub fn euler_zxy(m: &Mat3) -> [f64; 3] {
    let sx = m[2][1].clamp(-1.0, 1.0);
    let x = sx.asin();
    if sx.abs() < 1.0 - 1e-12 {
        let z = (-m[0][1]).atan2(m[1][1]);
        let y = (-m[2][0]).atan2(m[2][2]);
        [z, x, y]
    } else {
        [m[1][0].atan2(m[0][0]), x, 0.0]
    }
}

/// Per-frame local rotations: root yaw first, then every other joint.
fn local_rotations(pose: &GlobalPose, yaws: &[f64], skel: &Skeleton) -> Vec<Vec<Mat3>> {
    let joints = skel.joint_count();
    let offsets = skel.rest_offsets();
    (0..pose.frames())
        .map(|n| {
            let mut world: Vec<Mat3> = vec![math::rot_y(0.0); joints];
            let mut local = vec![math::rot_y(yaws[n]); joints];
            for j in 1..joints {
                let parent = skel.parent(j).expect("non-root joint has a parent");
                world[j] = match first_child(skel, j) {
                    Some(c) => {
                        let bone = math::unrotate_yaw(yaws[n], math::sub(pose.get(n, c), pose.get(n, j)));
                        math::rotation_between(offsets[c], bone)
                    }
                    None => world[parent],
                };
                local[j] = math::mat_mul(&math::transpose(&world[parent]), &world[j]);
            }
            local
        })
        .collect()
}

fn write_joint(out: &mut String, skel: &Skeleton, j: usize, depth: usize) {
    let pad = "  ".repeat(depth);
    let o = skel.rest_offsets()[j];
    let name = &skel.joint_names()[j];
    if j == skel.special().root {
        let _ = writeln!(out, "{pad}ROOT {name}\n{pad}{{\n{pad}  OFFSET 0 0 0");
        let _ = writeln!(out, "{pad}  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation");
    } else {
        let _ = writeln!(out, "{pad}JOINT {name}\n{pad}{{\n{pad}  OFFSET {} {} {}", o[0], o[1], o[2]);
        let _ = writeln!(out, "{pad}  CHANNELS 3 Zrotation Xrotation Yrotation");
    }
    let mut children: Vec<usize> = skel.children(j).collect();
    children.sort_unstable();
    if children.is_empty() {
        let tip = math::normalize(o).map(|(u, _)| math::scale(u, 0.05)).unwrap_or([0.0, 0.05, 0.0]);
        let _ = writeln!(out, "{pad}  End Site\n{pad}  {{\n{pad}    OFFSET {} {} {}\n{pad}  }}", tip[0], tip[1], tip[2]);
    }
    for c in children {
        write_joint(out, skel, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Joints in the order their channels appear in a BVH frame line.
pub fn bvh_joint_order(skel: &Skeleton) -> Vec<usize> {
    fn visit(skel: &Skeleton, j: usize, out: &mut Vec<usize>) {
        out.push(j);
        let mut children: Vec<usize> = skel.children(j).collect();
        children.sort_unstable();
        for c in children {
            visit(skel, c, out);
        }
    }
    let mut out = Vec::new();
    visit(skel, skel.special().root, &mut out);
    out
}

pub fn to_bvh(motion: &MotionSequence, skel: &Skeleton, origin: RootOrigin, fps: f64) -> Result<String> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    let pose = forward_kinematics_from(motion, skel, origin)?;
    let yaws = root_yaws(motion, origin);
    let rotations = local_rotations(&pose, &yaws, skel);
    let order = bvh_joint_order(skel);
    let root = skel.special().root;

    let mut out = String::from("HIERARCHY\n");
    write_joint(&mut out, skel, root, 0);
    let _ = writeln!(out, "MOTION\nFrames: {}\nFrame Time: {:.8}", pose.frames(), 1.0 / fps);
    for (n, rots) in rotations.iter().enumerate() {
        let p = pose.get(n, root);
        let mut fields: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
        for &j in &order {
            fields.extend(euler_zxy(&rots[j]).iter().map(|a| format!("{:.6}", a.to_degrees())));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// One row per frame and track: `track,frame,time` then `x,y,z` per joint.
pub fn to_csv(tracks: &[Track], skel: &Skeleton, fps: f64) -> Result<String> {
    let mut out = String::from("track,frame,time");
    for name in skel.joint_names() {
        let _ = write!(out, ",{name}_x,{name}_y,{name}_z");
    }
    out.push('\n');
    for t in tracks {
        let pose = forward_kinematics_from(t.motion, skel, t.origin)?;
        for n in 0..pose.frames() {
            let _ = write!(out, "{},{n},{:.6}", t.name, n as f64 / fps);
            for p in pose.frame(n) {
                let _ = write!(out, ",{:.6},{:.6},{:.6}", p[0], p[1], p[2]);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerTrack {
    pub name: String,
    /// `frames x joints` world positions.
    pub positions: Vec<Vec<Vec3>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerDocument {
    pub fps: f64,
    pub joints: Vec<String>,
    pub parents: Vec<Option<usize>>,
    pub tracks: Vec<ViewerTrack>,
}

pub fn to_viewer_json(tracks: &[Track], skel: &Skeleton, fps: f64) -> Result<String> {
    let doc = ViewerDocument {
        fps,
        joints: skel.joint_names().to_vec(),
        parents: skel.parents().to_vec(),
        tracks: tracks
            .iter()
            .map(|t| {
                let pose = forward_kinematics_from(t.motion, skel, t.origin)?;
                Ok(ViewerTrack {
                    name: t.name.clone(),
                    positions: (0..pose.frames()).map(|n| pose.frame(n).to_vec()).collect(),
                })
            })
            .collect::<Result<_>>()?,
    };
    Ok(serde_json::to_string(&doc)?)
}
