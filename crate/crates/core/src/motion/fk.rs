use super::{FeatureLayout, GlobalPose, MotionSequence, RootOrigin};
use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use crate::skeleton::Skeleton;

/// Global joint positions with the first frame at the world origin facing +Z.
pub fn forward_kinematics(motion: &MotionSequence, skeleton: &Skeleton) -> Result<GlobalPose> {
    forward_kinematics_from(motion, skeleton, RootOrigin::default())
}

/// Integrates root yaw and ground-plane velocity from `origin`, then places
/// the root-space joint positions around the root.
///
/// Frame `n` uses the yaw accumulated over frames `0..n`; the root velocity
/// stored at frame `k` moves the root between frames `k` and `k + 1`, so the
/// last frame's root velocities do not affect the output.
pub fn forward_kinematics_from(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    origin: RootOrigin,
) -> Result<GlobalPose> {
    let layout = FeatureLayout::new(skeleton.joint_count());
    layout.check(motion.dim())?;
    let joints = skeleton.joint_count();
    let mut pose = GlobalPose::zeros(motion.frames(), joints);

    let mut yaw = origin.yaw;
    let mut x = origin.x;
    let mut z = origin.z;
    for n in 0..motion.frames() {
        let row = motion.row(n);
        let root = [x, row[FeatureLayout::ROOT_HEIGHT], z];
        pose.set(n, 0, root);
        for j in 1..joints {
            let local = &row[layout.local_position(j)];
            let world = math::rotate_yaw(yaw, [local[0], local[1], local[2]]);
            pose.set(n, j, math::add(root, world));
        }
        let step = math::rotate_yaw(
            yaw,
            [row[FeatureLayout::ROOT_VEL_X], 0.0, row[FeatureLayout::ROOT_VEL_Z]],
        );
        x += step[0];
        z += step[2];
        yaw += row[FeatureLayout::ROOT_YAW_VEL];
    }
    Ok(pose)
}

/// Vector-Jacobian product of [`forward_kinematics_from`].
///
/// `grad` holds dL/d(position) for every frame and joint; the result is
/// dL/d(feature), laid out like the motion buffer.
pub fn fk_backward(
    motion: &MotionSequence,
    skeleton: &Skeleton,
    origin: RootOrigin,
    grad: &[Vec3],
) -> Result<Vec<f64>> {
    let layout = FeatureLayout::new(skeleton.joint_count());
    layout.check(motion.dim())?;
    let joints = skeleton.joint_count();
    let frames = motion.frames();
    if grad.len() != frames * joints {
        return Err(Error::DimensionMismatch {
            what: "position gradient length",
            expected: frames * joints,
            got: grad.len(),
        });
    }
    let dim = motion.dim();
    let mut out = vec![0.0; frames * dim];

    let mut yaws = Vec::with_capacity(frames);
    let mut yaw = origin.yaw;
    for n in 0..frames {
        yaws.push(yaw);
        yaw += motion.row(n)[FeatureLayout::ROOT_YAW_VEL];
    }

    let mut d_yaw = vec![0.0; frames];
    let mut root_grads = Vec::with_capacity(frames);
    for n in 0..frames {
        let row = motion.row(n);
        let g = &grad[n * joints..(n + 1) * joints];
        let out_row = &mut out[n * dim..(n + 1) * dim];
        let mut root_grad = g[0];
        for j in 1..joints {
            root_grad = math::add(root_grad, g[j]);
            let range = layout.local_position(j);
            let local = [row[range.start], row[range.start + 1], row[range.start + 2]];
            let gl = math::unrotate_yaw(yaws[n], g[j]);
            out_row[range.clone()].copy_from_slice(&gl);
            d_yaw[n] += math::dot(g[j], math::rotate_yaw_deriv(yaws[n], local));
        }
        out_row[FeatureLayout::ROOT_HEIGHT] = root_grad[1];
        root_grads.push(root_grad);
    }

    // velocity k moves every root position after frame k
    let mut later = [0.0; 3];
    for n in (0..frames).rev() {
        let row = motion.row(n);
        let v = [row[FeatureLayout::ROOT_VEL_X], 0.0, row[FeatureLayout::ROOT_VEL_Z]];
        let gv = math::unrotate_yaw(yaws[n], later);
        out[n * dim + FeatureLayout::ROOT_VEL_X] = gv[0];
        out[n * dim + FeatureLayout::ROOT_VEL_Z] = gv[2];
        d_yaw[n] += math::dot(later, math::rotate_yaw_deriv(yaws[n], v));
        later[0] += root_grads[n][0];
        later[2] += root_grads[n][2];
    }

    // yaw at frame n sums angular velocities of frames 0..n
    let mut acc = 0.0;
    for k in (0..frames).rev() {
        out[k * dim + FeatureLayout::ROOT_YAW_VEL] = acc;
        acc += d_yaw[k];
    }
    Ok(out)
}
