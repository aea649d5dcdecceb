//! Small fixed-size vector helpers used by kinematics and the guidance losses.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Adjoint of `w = a × b`: returns (dL/da, dL/db) given dL/dw.
#[inline]
pub fn cross_backward(a: Vec3, b: Vec3, grad_w: Vec3) -> (Vec3, Vec3) {
    (cross(b, grad_w), cross(grad_w, a))
}

/// Unit vector and the norm it was divided by.
#[inline]
pub fn normalize(a: Vec3) -> Option<(Vec3, f64)> {
    let n = norm(a);
    if n < 1e-12 || !n.is_finite() {
        None
    } else {
        Some((scale(a, 1.0 / n), n))
    }
}

/// Adjoint of `u = v / |v|`.
#[inline]
pub fn normalize_backward(u: Vec3, len: f64, grad_u: Vec3) -> Vec3 {
    let proj = dot(u, grad_u);
    scale(sub(grad_u, scale(u, proj)), 1.0 / len)
}

/// Rotation about +Y by `yaw` radians; maps +Z to (sin yaw, 0, cos yaw).
#[inline]
pub fn rotate_yaw(yaw: f64, v: Vec3) -> Vec3 {
    let (s, c) = yaw.sin_cos();
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// Inverse of [`rotate_yaw`].
#[inline]
pub fn unrotate_yaw(yaw: f64, v: Vec3) -> Vec3 {
    rotate_yaw(-yaw, v)
}

/// d/dyaw of `rotate_yaw(yaw, v)`.
#[inline]
pub fn rotate_yaw_deriv(yaw: f64, v: Vec3) -> Vec3 {
    let (s, c) = yaw.sin_cos();
    [-s * v[0] + c * v[2], 0.0, -c * v[0] - s * v[2]]
}

pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

/// Rotation of `angle` radians about a unit `axis` (Rodrigues).
pub fn axis_angle(axis: Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = axis;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

pub fn rot_x(a: f64) -> Mat3 {
    axis_angle([1.0, 0.0, 0.0], a)
}

pub fn rot_y(a: f64) -> Mat3 {
    axis_angle([0.0, 1.0, 0.0], a)
}

pub fn rot_z(a: f64) -> Mat3 {
    axis_angle([0.0, 0.0, 1.0], a)
}

/// Shortest-arc rotation taking direction `from` onto direction `to`.
pub fn rotation_between(from: Vec3, to: Vec3) -> Mat3 {
    let (Some((a, _)), Some((b, _))) = (normalize(from), normalize(to)) else {
        return IDENTITY;
    };
    let c = dot(a, b).clamp(-1.0, 1.0);
    match normalize(cross(a, b)) {
        Some((axis, _)) => axis_angle(axis, c.acos()),
        None if c > 0.0 => IDENTITY,
        None => {
            // anti-parallel: rotate by pi about any axis orthogonal to `a`
            let helper = if a[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let axis = normalize(cross(a, helper)).map(|(u, _)| u).unwrap_or([0.0, 0.0, 1.0]);
            axis_angle(axis, std::f64::consts::PI)
        }
    }
}

/// Continuous 6-component form: first two columns of `m`, flattened row-major.
pub fn to_6d(m: &Mat3) -> [f64; 6] {
    [m[0][0], m[0][1], m[1][0], m[1][1], m[2][0], m[2][1]]
}

/// Recovers a rotation from its 6-component form by Gram-Schmidt.
pub fn from_6d(r: &[f64]) -> Mat3 {
    let c0 = [r[0], r[2], r[4]];
    let c1 = [r[1], r[3], r[5]];
    let a = normalize(c0).map(|(u, _)| u).unwrap_or([1.0, 0.0, 0.0]);
    let b = normalize(sub(c1, scale(a, dot(a, c1))))
        .map(|(u, _)| u)
        .unwrap_or([0.0, 1.0, 0.0]);
    let c = cross(a, b);
    [[a[0], b[0], c[0]], [a[1], b[1], c[1]], [a[2], b[2], c[2]]]
}
