//! Spatial losses on world-space poses and their gradients with respect to
//! joint positions.

use serde::{Deserialize, Serialize};

use super::SpatialCondition;
use crate::error::{Error, Result};
use crate::interaction::Relation;
use crate::math::{self, Vec3};
use crate::motion::GlobalPose;
use crate::skeleton::Skeleton;

/// Per-entry hinge: pulls inside `desired` for contact, pushes beyond it for
/// avoid. Returns the value and its derivative with respect to `d`, taking
/// the subgradient 0 at the kink.
#[inline]
pub fn hinge(d: f64, desired: f64, relation: Relation) -> (f64, f64) {
    match relation {
        Relation::Contact if d > desired => (d - desired, 1.0),
        Relation::Avoid if d < desired => (desired - d, -1.0),
        _ => (0.0, 0.0),
    }
}

/// Distance between `p` and `target` over the axes flagged in `axes`.
#[inline]
pub fn masked_distance(p: Vec3, target: Vec3, axes: [bool; 3]) -> f64 {
    (0..3)
        .filter(|&k| axes[k])
        .map(|k| (target[k] - p[k]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `d[n * J + j]`: distance of each joint to its target over the controlled
/// axes; zero for uncontrolled entries.
pub fn joint_distance(pose: &GlobalPose, cond: &SpatialCondition) -> Result<Vec<f64>> {
    check_pose(pose, cond)?;
    let mut out = vec![0.0; pose.frames() * pose.joints()];
    for (n, j) in cond.controlled() {
        out[n * pose.joints() + j] = masked_distance(pose.get(n, j), cond.target(n, j), cond.mask(n, j));
    }
    Ok(out)
}

/// Masked mean of hinge losses: `sum m * l / sum m` with `m` the `N x J x 3`
/// binary mask and `l` broadcast over the three axes. An empty mask gives 0.
pub fn contact_loss(distances: &[f64], desired: &[f64], relations: &[Relation], mask: &[[bool; 3]]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..distances.len() {
        let w = mask[i].iter().filter(|m| **m).count() as f64;
        if w == 0.0 {
            continue;
        }
        num += w * hinge(distances[i], desired[i], relations[i]).0;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Contact loss of a pose against fixed targets, with the gradient with
/// respect to every joint position.
pub fn contact_loss_grad(pose: &GlobalPose, cond: &SpatialCondition) -> Result<(f64, Vec<Vec3>)> {
    check_pose(pose, cond)?;
    let mut grad = vec![[0.0; 3]; pose.frames() * pose.joints()];
    let den = cond.mask_count() as f64;
    if den == 0.0 {
        return Ok((0.0, grad));
    }
    let mut num = 0.0;
    for (n, j) in cond.controlled() {
        let axes = cond.mask(n, j);
        let w = axes.iter().filter(|m| **m).count() as f64;
        let p = pose.get(n, j);
        let c = cond.target(n, j);
        let d = masked_distance(p, c, axes);
        let (l, dl) = hinge(d, cond.distance(n, j), cond.relation(n, j));
        num += w * l;
        if dl != 0.0 && d > 0.0 {
            let g = &mut grad[n * pose.joints() + j];
            for k in 0..3 {
                if axes[k] {
                    g[k] += w * dl * (p[k] - c[k]) / d / den;
                }
            }
        }
    }
    Ok((num / den, grad))
}

fn check_pose(pose: &GlobalPose, cond: &SpatialCondition) -> Result<()> {
    if pose.frames() != cond.frames() || pose.joints() != cond.joints() {
        return Err(Error::DimensionMismatch {
            what: "condition entries",
            expected: pose.frames() * pose.joints(),
            got: cond.frames() * cond.joints(),
        });
    }
    Ok(())
}

/// Value and position gradients of a two-pose loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrad {
    pub value: f64,
    pub grad_a: Vec<Vec3>,
    pub grad_b: Vec<Vec3>,
}

/// Facing direction: normalized `(head - pelvis) x (right_shoulder - left_shoulder)`.
fn facing(pose: &GlobalPose, skel: &Skeleton, n: usize) -> Option<(Vec3, f64, Vec3, Vec3)> {
    let s = skel.special();
    let a1 = math::sub(pose.get(n, s.head), pose.get(n, s.root));
    let a2 = math::sub(pose.get(n, s.right_shoulder), pose.get(n, s.left_shoulder));
    let (u, len) = math::normalize(math::cross(a1, a2))?;
    Some((u, len, a1, a2))
}

fn facing_backward(skel: &Skeleton, n: usize, joints: usize, f: (Vec3, f64, Vec3, Vec3), grad_u: Vec3, grad: &mut [Vec3]) {
    let s = skel.special();
    let (u, len, a1, a2) = f;
    let gw = math::normalize_backward(u, len, grad_u);
    let (ga1, ga2) = math::cross_backward(a1, a2, gw);
    let at = |j: usize| n * joints + j;
    grad[at(s.head)] = math::add(grad[at(s.head)], ga1);
    grad[at(s.root)] = math::sub(grad[at(s.root)], ga1);
    grad[at(s.right_shoulder)] = math::add(grad[at(s.right_shoulder)], ga2);
    grad[at(s.left_shoulder)] = math::sub(grad[at(s.left_shoulder)], ga2);
}

/// Orientation loss driving two people to face each other, averaged over
/// frames:
/// `|u_a + u_b|^2 + (1 - u_a . h) + (1 + u_b . h)` with `u` the unit facing
/// vectors and `h` the unit direction from head a to head b.
///
/// With `lenient`, degenerate frames (collinear torso axes or coincident
/// heads) contribute nothing instead of failing.
pub fn face_to_face_grad(pa: &GlobalPose, pb: &GlobalPose, skel: &Skeleton, lenient: bool) -> Result<PairGrad> {
    check_pair(pa, pb)?;
    let frames = pa.frames();
    let joints = pa.joints();
    let head = skel.special().head;
    let mut out = PairGrad {
        value: 0.0,
        grad_a: vec![[0.0; 3]; frames * joints],
        grad_b: vec![[0.0; 3]; frames * joints],
    };
    let inv = 1.0 / frames as f64;
    for n in 0..frames {
        let fa = facing(pa, skel, n);
        let fb = facing(pb, skel, n);
        let h = math::normalize(math::sub(pb.get(n, head), pa.get(n, head)));
        let (Some(fa), Some(fb), Some((h, hlen))) = (fa, fb, h) else {
            if lenient {
                continue;
            }
            return Err(Error::DegenerateFrame {
                frame: n,
                what: "facing direction undefined",
            });
        };
        let (ua, ub) = (fa.0, fb.0);
        let sum = math::add(ua, ub);
        out.value += inv * (math::dot(sum, sum) + (1.0 - math::dot(ua, h)) + (1.0 + math::dot(ub, h)));

        let gua = math::scale(math::sub(math::scale(sum, 2.0), h), inv);
        let gub = math::scale(math::add(math::scale(sum, 2.0), h), inv);
        let gh = math::scale(math::sub(ub, ua), inv);
        facing_backward(skel, n, joints, fa, gua, &mut out.grad_a);
        facing_backward(skel, n, joints, fb, gub, &mut out.grad_b);
        let ghr = math::normalize_backward(h, hlen, gh);
        let i = n * joints + head;
        out.grad_b[i] = math::add(out.grad_b[i], ghr);
        out.grad_a[i] = math::sub(out.grad_a[i], ghr);
    }
    Ok(out)
}

pub fn face_to_face_loss(pa: &GlobalPose, pb: &GlobalPose, skel: &Skeleton) -> Result<f64> {
    Ok(face_to_face_grad(pa, pb, skel, false)?.value)
}

/// Torso separation: mean over frames and over all pairs (torso joint of a,
/// torso joint of b) of `relu(clearance - ground-plane distance)`.
pub fn collision_grad(pa: &GlobalPose, pb: &GlobalPose, skel: &Skeleton, clearance: f64) -> Result<PairGrad> {
    check_pair(pa, pb)?;
    let frames = pa.frames();
    let joints = pa.joints();
    let torso = skel.torso();
    let mut out = PairGrad {
        value: 0.0,
        grad_a: vec![[0.0; 3]; frames * joints],
        grad_b: vec![[0.0; 3]; frames * joints],
    };
    if torso.is_empty() {
        return Ok(out);
    }
    let inv = 1.0 / (frames * torso.len() * torso.len()) as f64;
    for n in 0..frames {
        for &i in torso {
            let p = pa.get(n, i);
            for &k in torso {
                let q = pb.get(n, k);
                let (dx, dz) = (p[0] - q[0], p[2] - q[2]);
                let d = (dx * dx + dz * dz).sqrt();
                if d >= clearance {
                    continue;
                }
                out.value += inv * (clearance - d);
                if d > 0.0 {
                    let g = [-inv * dx / d, 0.0, -inv * dz / d];
                    let ia = n * joints + i;
                    let ib = n * joints + k;
                    out.grad_a[ia] = math::add(out.grad_a[ia], g);
                    out.grad_b[ib] = math::sub(out.grad_b[ib], g);
                }
            }
        }
    }
    Ok(out)
}

pub fn collision_loss(pa: &GlobalPose, pb: &GlobalPose, skel: &Skeleton, clearance: f64) -> Result<f64> {
    Ok(collision_grad(pa, pb, skel, clearance)?.value)
}

/// Axis-aligned rectangle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            z_min,
            z_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.z_min < self.z_max) {
            return Err(Error::InvalidArgument("region bounds must satisfy min < max".into()));
        }
        Ok(())
    }

    /// Offset from the rectangle to `(x, z)` along each axis; zero inside.
    fn outside(&self, x: f64, z: f64) -> (f64, f64) {
        let ox = if x < self.x_min {
            x - self.x_min
        } else if x > self.x_max {
            x - self.x_max
        } else {
            0.0
        };
        let oz = if z < self.z_min {
            z - self.z_min
        } else if z > self.z_max {
            z - self.z_max
        } else {
            0.0
        };
        (ox, oz)
    }
}

/// Sum over frames of the root's ground-plane distance outside `bounds`.
pub fn region_grad(pose: &GlobalPose, skel: &Skeleton, bounds: &Rect) -> (f64, Vec<Vec3>) {
    let root = skel.special().root;
    let joints = pose.joints();
    let mut grad = vec![[0.0; 3]; pose.frames() * joints];
    let mut value = 0.0;
    for n in 0..pose.frames() {
        let p = pose.get(n, root);
        let (ox, oz) = bounds.outside(p[0], p[2]);
        let d = (ox * ox + oz * oz).sqrt();
        if d > 0.0 {
            value += d;
            grad[n * joints + root] = [ox / d, 0.0, oz / d];
        }
    }
    (value, grad)
}

pub fn region_loss(pose: &GlobalPose, skel: &Skeleton, bounds: &Rect) -> Result<f64> {
    bounds.validate()?;
    Ok(region_grad(pose, skel, bounds).0)
}

fn check_pair(pa: &GlobalPose, pb: &GlobalPose) -> Result<()> {
    if pa.frames() != pb.frames() || pa.joints() != pb.joints() {
        return Err(Error::DimensionMismatch {
            what: "paired pose size",
            expected: pa.frames() * pa.joints(),
            got: pb.frames() * pb.joints(),
        });
    }
    Ok(())
}
