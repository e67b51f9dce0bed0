use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Norms below this cannot be normalized reliably.
pub const MIN_QUATERNION_NORM: f64 = 1e-6;

/// Unit quaternion stored as `w, x, y, z` (Hamilton convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Intrinsic Z-Y-X Euler angles: yaw about z, then pitch about the new y,
/// then roll about the new x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a unit quaternion, normalizing the input. Inputs already unit
    /// to within a few ulps are kept bit-for-bit so serialization round trips.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm_sq = w * w + x * x + y * y + z * z;
        let norm = norm_sq.sqrt();
        if !norm.is_finite() || norm < MIN_QUATERNION_NORM {
            return Err(Error::invalid(format!(
                "quaternion ({w}, {x}, {y}, {z}) has norm {norm} and cannot be normalized"
            )));
        }
        if (norm_sq - 1.0).abs() <= 8.0 * f64::EPSILON {
            return Ok(Quaternion { w, x, y, z });
        }
        Ok(Quaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::invalid("rotation axis must be non-zero"));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = axis / n;
        Quaternion::new(c, a.x * s, a.y * s, a.z * s)
    }

    /// Rotation by `yaw` about +z.
    pub fn from_yaw(yaw: f64) -> Self {
        let (s, c) = (yaw / 2.0).sin_cos();
        Quaternion {
            w: c,
            x: 0.0,
            y: 0.0,
            z: s,
        }
    }

    /// Inverse of [`Quaternion::to_euler`]: `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_euler(e: EulerAngles) -> Self {
        let (sr, cr) = (e.roll / 2.0).sin_cos();
        let (sp, cp) = (e.pitch / 2.0).sin_cos();
        let (sy, cy) = (e.yaw / 2.0).sin_cos();
        Quaternion {
            w: cr * cp * cy + sr * sp * sy,
            x: sr * cp * cy - cr * sp * sy,
            y: cr * sp * cy + sr * cp * sy,
            z: cr * cp * sy - sr * sp * cy,
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components in `w, x, y, z` order.
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conjugate(&self) -> Self {
        Quaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Roll, pitch and yaw in the intrinsic Z-Y-X convention. At gimbal lock
    /// the pitch argument is clamped to `[-1, 1]`.
    pub fn to_euler(&self) -> EulerAngles {
        let Quaternion { w, x, y, z } = *self;
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin();
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        EulerAngles { roll, pitch, yaw }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let Quaternion { w, x, y, z } = *self;
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        Matrix3::new(
            1.0 - 2.0 * (yy + zz),
            2.0 * (xy - wz),
            2.0 * (xz + wy),
            2.0 * (xy + wz),
            1.0 - 2.0 * (xx + zz),
            2.0 * (yz - wx),
            2.0 * (xz - wy),
            2.0 * (yz + wx),
            1.0 - 2.0 * (xx + yy),
        )
    }

    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v
    }

    /// True when both quaternions describe the same rotation within `tol`
    /// (q and -q are equivalent).
    pub fn same_rotation(&self, other: &Quaternion, tol: f64) -> bool {
        let a = self.to_array();
        let b = other.to_array();
        let plus = a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= tol);
        let minus = a.iter().zip(&b).all(|(p, q)| (p + q).abs() <= tol);
        plus || minus
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product. The result is renormalized to keep drift out of
    /// long composition chains.
    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        let w = l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z;
        let x = l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y;
        let y = l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x;
        let z = l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w;
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Quaternion {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }
}
