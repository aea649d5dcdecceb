use crate::error::{Error, Result};
use crate::guidance::SpatialCondition;
use crate::motion::{body_normals_lenient, forward_kinematics_from, MotionSequence, RootOrigin};
use crate::skeleton::Skeleton;

/// Per-frame ControlNet input, `N x (6J + 6)` row-major: offsets from the
/// current joints to the targets (`3J`), offsets from the current root to the
/// targets (`3J`), then the shoulder and hip normals. Offsets are zero on
/// every axis the mask leaves uncontrolled.
///
/// `motion` holds raw (denormalized) features placed at `origin`.
pub fn build_condition(
    motion: &MotionSequence,
    cond: &SpatialCondition,
    skel: &Skeleton,
    origin: RootOrigin,
) -> Result<Vec<f64>> {
    let joints = skel.joint_count();
    if cond.frames() != motion.frames() || cond.joints() != joints {
        return Err(Error::DimensionMismatch {
            what: "condition size",
            expected: motion.frames() * joints,
            got: cond.frames() * cond.joints(),
        });
    }
    let pose = forward_kinematics_from(motion, skel, origin)?;
    let normals = body_normals_lenient(&pose, skel);
    let width = 6 * joints + 6;
    let root = skel.special().root;
    let mut out = vec![0.0; motion.frames() * width];
    for n in 0..motion.frames() {
        let row = &mut out[n * width..(n + 1) * width];
        let r = pose.get(n, root);
        for j in 0..joints {
            let mask = cond.mask(n, j);
            if !mask.iter().any(|m| *m) {
                continue;
            }
            let c = cond.target(n, j);
            let p = pose.get(n, j);
            for k in 0..3 {
                if mask[k] {
                    row[3 * j + k] = c[k] - p[k];
                    row[3 * joints + 3 * j + k] = c[k] - r[k];
                }
            }
        }
        row[6 * joints..6 * joints + 3].copy_from_slice(&normals.shoulders[n]);
        row[6 * joints + 3..].copy_from_slice(&normals.hips[n]);
    }
    debug_assert!(out.iter().all(|v| v.is_finite()) || !motion.is_finite());
    Ok(out)
}
