//! Spatial control metrics.
//!
//! A keyframe is a controlled `(frame, joint)` entry. Its error is the
//! amount by which the joint violates its relation: the masked distance to
//! the target beyond the desired distance for contact, the shortfall below
//! it for avoid. With the single-person default (contact, desired distance
//! 0) this is the plain distance to the keyframe location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::{hinge, losses::masked_distance, SpatialCondition};
use crate::motion::GlobalPose;
use crate::skeleton::Skeleton;

/// Threshold used for single-person suites, meters.
pub const SINGLE_THRESHOLD: f64 = 0.5;
/// Threshold used for interaction suites, meters.
pub const INTERACTION_THRESHOLD: f64 = 0.2;
pub const SKATE_HEIGHT: f64 = 0.05;
pub const SKATE_DISPLACEMENT: f64 = 0.025;

/// Errors at every keyframe of one sample, row-major order.
pub fn keyframe_errors(pose: &GlobalPose, cond: &SpatialCondition) -> Result<Vec<f64>> {
    if pose.frames() != cond.frames() || pose.joints() != cond.joints() {
        return Err(Error::DimensionMismatch {
            what: "pose/condition size",
            expected: cond.frames() * cond.joints(),
            got: pose.frames() * pose.joints(),
        });
    }
    Ok(cond
        .controlled()
        .map(|(n, j)| {
            let d = masked_distance(pose.get(n, j), cond.target(n, j), cond.mask(n, j));
            hinge(d, cond.distance(n, j), cond.relation(n, j)).0
        })
        .collect())
}

fn all_errors(poses: &[GlobalPose], conds: &[SpatialCondition]) -> Result<Vec<Vec<f64>>> {
    if poses.len() != conds.len() {
        return Err(Error::DimensionMismatch {
            what: "sample count",
            expected: conds.len(),
            got: poses.len(),
        });
    }
    poses.iter().zip(conds).map(|(p, c)| keyframe_errors(p, c)).collect()
}

/// Fraction of samples with at least one keyframe error above `threshold`.
pub fn trajectory_error(poses: &[GlobalPose], conds: &[SpatialCondition], threshold: f64) -> Result<f64> {
    let errs = all_errors(poses, conds)?;
    if errs.is_empty() {
        return Ok(0.0);
    }
    let failed = errs.iter().filter(|e| e.iter().any(|v| *v > threshold)).count();
    Ok(failed as f64 / errs.len() as f64)
}

/// Fraction of keyframes whose error exceeds `threshold`.
pub fn location_error(poses: &[GlobalPose], conds: &[SpatialCondition], threshold: f64) -> Result<f64> {
    let errs: Vec<f64> = all_errors(poses, conds)?.into_iter().flatten().collect();
    if errs.is_empty() {
        return Ok(0.0);
    }
    Ok(errs.iter().filter(|v| **v > threshold).count() as f64 / errs.len() as f64)
}

/// Mean keyframe error in meters.
pub fn average_error(poses: &[GlobalPose], conds: &[SpatialCondition]) -> Result<f64> {
    let errs: Vec<f64> = all_errors(poses, conds)?.into_iter().flatten().collect();
    if errs.is_empty() {
        return Ok(0.0);
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Fraction of frame transitions where a foot joint below
/// [`SKATE_HEIGHT`] moves more than [`SKATE_DISPLACEMENT`] horizontally.
pub fn foot_skating_ratio(pose: &GlobalPose, skel: &Skeleton) -> f64 {
    let frames = pose.frames();
    if frames < 2 {
        return 0.0;
    }
    let s = skel.special();
    let feet = [s.left_foot, s.right_foot];
    let skating = (0..frames - 1)
        .filter(|&n| {
            feet.iter().any(|&f| {
                let a = pose.get(n, f);
                let b = pose.get(n + 1, f);
                let planar = ((b[0] - a[0]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
                a[1] < SKATE_HEIGHT && planar > SKATE_DISPLACEMENT
            })
        })
        .count();
    skating as f64 / (frames - 1) as f64
}

/// Smallest ground-plane distance between any torso joint of `a` and any
/// torso joint of `b`, per frame.
pub fn torso_distances(a: &GlobalPose, b: &GlobalPose, skel: &Skeleton) -> Vec<f64> {
    let torso = skel.torso();
    (0..a.frames().min(b.frames()))
        .map(|n| {
            let mut best = f64::INFINITY;
            for &i in torso {
                let p = a.get(n, i);
                for &k in torso {
                    let q = b.get(n, k);
                    best = best.min(((p[0] - q[0]).powi(2) + (p[2] - q[2]).powi(2)).sqrt());
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub trajectory: f64,
    pub location: f64,
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Self {
            trajectory: t,
            location: t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub traj_err: f64,
    pub loc_err: f64,
    pub avg_err: f64,
    pub foot_skate: f64,
    pub n_samples: usize,
    pub n_keyframes: usize,
    pub thresholds: Thresholds,
    /// Set when no sample has a controlled entry; the spatial metrics are 0.
    pub empty_mask: bool,
}

pub fn evaluate(
    poses: &[GlobalPose],
    conds: &[SpatialCondition],
    skel: &Skeleton,
    thresholds: Thresholds,
) -> Result<MetricsReport> {
    let n_keyframes = conds.iter().map(|c| c.controlled().count()).sum();
    let foot_skate = if poses.is_empty() {
        0.0
    } else {
        poses.iter().map(|p| foot_skating_ratio(p, skel)).sum::<f64>() / poses.len() as f64
    };
    Ok(MetricsReport {
        traj_err: trajectory_error(poses, conds, thresholds.trajectory)?,
        loc_err: location_error(poses, conds, thresholds.location)?,
        avg_err: average_error(poses, conds)?,
        foot_skate,
        n_samples: poses.len(),
        n_keyframes,
        thresholds,
        empty_mask: n_keyframes == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::Relation;

    fn still(frames: usize) -> GlobalPose {
        let skel = Skeleton::default();
        let mut pos = Vec::new();
        for _ in 0..frames {
            pos.extend(skel.rest_positions().into_iter().map(|p| [p[0], p[1] + 1.0, p[2]]));
        }
        GlobalPose::new(frames, 22, pos).unwrap()
    }

    #[test]
    fn offsets_give_expected_ratios() {
        let pose = still(10);
        let mut cond = SpatialCondition::new(10, 22);
        for n in 0..10 {
            let mut c = pose.get(n, 0);
            if n == 3 {
                c[0] += 0.6;
            } else {
                c[0] += 0.1;
            }
            cond.set(n, 0, c, 0.0, Relation::Contact).unwrap();
        }
        let poses = vec![pose.clone(), pose.clone(), pose.clone(), pose];
        let mut ok = SpatialCondition::new(10, 22);
        for n in 0..10 {
            ok.set(n, 0, poses[0].get(n, 0), 0.0, Relation::Contact).unwrap();
        }
        let conds = vec![cond.clone(), ok.clone(), ok.clone(), ok];
        assert!((trajectory_error(&poses, &conds, 0.5).unwrap() - 0.25).abs() < 1e-12);
        assert!((location_error(&poses[..1], &conds[..1], 0.5).unwrap() - 0.1).abs() < 1e-12);
        let avg = average_error(&poses[..1], &conds[..1]).unwrap();
        assert!((avg - (0.6 + 9.0 * 0.1) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_feet_do_not_skate() {
        let skel = Skeleton::default();
        let mut pose = still(5);
        for n in 0..5 {
            for j in 0..22 {
                let mut p = pose.get(n, j);
                p[1] -= 1.0;
                pose.set(n, j, p);
            }
        }
        assert_eq!(foot_skating_ratio(&pose, &skel), 0.0);
    }
}
