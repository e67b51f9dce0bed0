use std::f64::consts::PI;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::{Error, Result};

/// Slack allowed on every axis when testing point membership. Points on the
/// boundary count as inside.
pub const BOX_EPSILON: f64 = 1e-9;

/// Wraps an angle into `(-π, π]`. Angles already in range are returned
/// untouched so that label round trips stay bit-exact.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if yaw > -PI && yaw <= PI {
        return yaw;
    }
    let wrapped = yaw.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

fn check_size(size: &Vector3<f64>) -> Result<()> {
    if size.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "box dimensions must be positive and finite, got ({}, {}, {})",
            size.x, size.y, size.z
        )))
    }
}

/// Heading-only 3D box: the KITTI/OpenPCDet label geometry.
///
/// `size` is `(dx, dy, dz)` with `dx` along the heading direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    center: Point3<f64>,
    size: Vector3<f64>,
    yaw: f64,
}

impl Box3D {
    pub fn new(center: Point3<f64>, size: Vector3<f64>, yaw: f64) -> Result<Self> {
        check_size(&size)?;
        if !center.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(Error::invalid("box center and yaw must be finite"));
        }
        Ok(Box3D {
            center,
            size,
            yaw: normalize_yaw(yaw),
        })
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }
    pub fn size(&self) -> Vector3<f64> {
        self.size
    }
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn volume(&self) -> f64 {
        self.size.x * self.size.y * self.size.z
    }

    pub fn bev_area(&self) -> f64 {
        self.size.x * self.size.y
    }

    /// Vertical extent `(bottom, top)`.
    pub fn z_range(&self) -> (f64, f64) {
        let h = self.size.z / 2.0;
        (self.center.z - h, self.center.z + h)
    }

    /// Footprint corners, counter-clockwise.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hx = self.size.x / 2.0;
        let hy = self.size.y / 2.0;
        let local = [[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]];
        local.map(|[u, v]| [self.center.x + c * u - s * v, self.center.y + s * u + c * v])
    }

    pub fn with_center(&self, center: Point3<f64>) -> Result<Self> {
        Box3D::new(center, self.size, self.yaw)
    }

    /// Full-rotation box with the same geometry (rotation about z by `yaw`).
    pub fn to_oriented(&self) -> OrientedBoxFull {
        let (s, c) = self.yaw.sin_cos();
        OrientedBoxFull {
            center: self.center,
            size: self.size,
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let d = p - self.center;
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        lx.abs() <= self.size.x / 2.0 + BOX_EPSILON
            && ly.abs() <= self.size.y / 2.0 + BOX_EPSILON
            && d.z.abs() <= self.size.z / 2.0 + BOX_EPSILON
    }
}

/// Box with an arbitrary orientation, used for cropping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBoxFull {
    center: Point3<f64>,
    size: Vector3<f64>,
    rotation: Matrix3<f64>,
}

impl OrientedBoxFull {
    /// `rotation` maps box-local axes into the parent frame and must be a
    /// proper rotation within 1e-6.
    pub fn new(center: Point3<f64>, size: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        check_size(&size)?;
        let ortho = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        let det = rotation.determinant();
        if !(ortho <= 1e-6) || !((det - 1.0).abs() <= 1e-6) {
            return Err(Error::invalid(format!(
                "box rotation is not a proper rotation (|RtR - I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(OrientedBoxFull {
            center,
            size,
            rotation,
        })
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }
    pub fn size(&self) -> Vector3<f64> {
        self.size
    }
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    /// Coordinates of `p` along the box axes, relative to its center.
    pub fn to_local(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.center)
    }
}

pub fn point_in_box(p: &Point3<f64>, b: &OrientedBoxFull) -> bool {
    let local = b.to_local(p);
    (0..3).all(|i| local[i].abs() <= b.size[i] / 2.0 + BOX_EPSILON)
}
