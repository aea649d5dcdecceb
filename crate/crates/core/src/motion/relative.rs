use super::{FeatureLayout, GlobalPose, MotionSequence, RootOrigin};
use crate::error::{Error, Result};
use crate::math;
#[cfg(test)]
use crate::math::Vec3;
use crate::skeleton::Skeleton;

/// Foot joints below this height (meters) may be labelled as in contact.
pub const CONTACT_HEIGHT: f64 = 0.05;
/// Foot joints moving slower than this (meters per frame) may be labelled as
/// in contact.
pub const CONTACT_SPEED: f64 = 0.025;

/// Heading of the body in frame `n`, from the hip and shoulder axes.
fn facing_yaw(pose: &GlobalPose, skeleton: &Skeleton, n: usize) -> Result<f64> {
    let s = skeleton.special();
    let across = math::add(
        math::sub(pose.get(n, s.left_hip), pose.get(n, s.right_hip)),
        math::sub(pose.get(n, s.left_shoulder), pose.get(n, s.right_shoulder)),
    );
    // across x up
    let forward = [-across[2], 0.0, across[0]];
    if math::norm(forward) < 1e-9 {
        return Err(Error::DegenerateFrame {
            frame: n,
            what: "hip and shoulder axes give no horizontal heading",
        });
    }
    Ok(forward[0].atan2(forward[2]))
}

/// Converts world-space joint positions into the relative representation.
///
/// Returns the features together with the placement of the first frame, so
/// `forward_kinematics_from(&m, skel, origin)` reproduces `global`. Root and
/// joint velocities of the last frame repeat those of the previous frame.
pub fn to_relative(global: &GlobalPose, skeleton: &Skeleton) -> Result<(MotionSequence, RootOrigin)> {
    let joints = skeleton.joint_count();
    if global.joints() != joints {
        return Err(Error::DimensionMismatch {
            what: "pose joint count",
            expected: joints,
            got: global.joints(),
        });
    }
    let frames = global.frames();
    if frames < 2 {
        return Err(Error::InvalidArgument(
            "relative conversion needs at least two frames".into(),
        ));
    }
    if !global.is_finite() {
        return Err(Error::InvalidArgument("pose contains non-finite values".into()));
    }
    let layout = FeatureLayout::new(joints);
    let root = skeleton.special().root;
    let yaws = (0..frames)
        .map(|n| facing_yaw(global, skeleton, n))
        .collect::<Result<Vec<_>>>()?;

    let mut motion = MotionSequence::zeros(frames, layout.dim());
    for n in 0..frames {
        let yaw = yaws[n];
        // the last frame reuses the step into it
        let (a, b) = if n + 1 < frames { (n, n + 1) } else { (n - 1, n) };
        let yaw_a = yaws[a];
        let p = global.get(n, root);
        let step = math::unrotate_yaw(yaw_a, math::sub(global.get(b, root), global.get(a, root)));

        let row = motion.row_mut(n);
        row[FeatureLayout::ROOT_YAW_VEL] = math::wrap_angle(yaws[b] - yaw_a);
        row[FeatureLayout::ROOT_VEL_X] = step[0];
        row[FeatureLayout::ROOT_VEL_Z] = step[2];
        row[FeatureLayout::ROOT_HEIGHT] = p[1];

        for j in 1..joints {
            let local = math::unrotate_yaw(yaw, math::sub(global.get(n, j), p));
            row[layout.local_position(j)].copy_from_slice(&local);

            let parent = skeleton.parent(j).expect("non-root joint has a parent");
            let bone = math::unrotate_yaw(yaw, math::sub(global.get(n, j), global.get(n, parent)));
            let rot = math::rotation_between(skeleton.rest_offsets()[j], bone);
            row[layout.rotation(j)].copy_from_slice(&math::to_6d(&rot));
        }
        for j in 0..joints {
            let v = math::unrotate_yaw(yaw_a, math::sub(global.get(b, j), global.get(a, j)));
            row[layout.velocity(j)].copy_from_slice(&v);
        }
        let contacts = layout.foot_contacts().start;
        for (k, &foot) in skeleton.special().feet().iter().enumerate() {
            let height = global.get(n, foot)[1];
            let speed = math::norm(math::sub(global.get(b, foot), global.get(a, foot)));
            row[contacts + k] = if height < CONTACT_HEIGHT && speed < CONTACT_SPEED {
                1.0
            } else {
                0.0
            };
        }
    }

    let p0 = global.get(0, root);
    Ok((
        motion,
        RootOrigin {
            x: p0[0],
            z: p0[2],
            yaw: yaws[0],
        },
    ))
}

/// Rest pose placed at `root` with heading `yaw`, one frame.
#[cfg(test)]
pub(crate) fn posed_rest(skeleton: &Skeleton, root: Vec3, yaw: f64) -> Vec<Vec3> {
    skeleton
        .rest_positions()
        .into_iter()
        .map(|p| math::add(root, math::rotate_yaw(yaw, p)))
        .collect()
}
