use nalgebra::{Point3, Vector3};

use super::Quaternion;

/// Rigid placement of a body: position of its origin and its orientation,
/// both expressed in some parent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point3<f64>,
    pub orientation: Quaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Point3::new(0.0, 0.0, 0.0),
        orientation: Quaternion::IDENTITY,
    };

    pub fn new(position: Point3<f64>, orientation: Quaternion) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose::new(Point3::new(x, y, z), Quaternion::IDENTITY)
    }

    /// Maps a point given in this pose's local frame into the parent frame.
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        self.position + self.orientation.rotation_matrix() * p.coords
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn apply_inverse(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.orientation.rotation_matrix().transpose() * (p - self.position))
    }

    /// `self ∘ local`: interprets `local` as relative to `self` and returns it
    /// in `self`'s parent frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.apply(&local.position),
            orientation: self.orientation * local.orientation,
        }
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Pose {
        Pose {
            position: self.position + offset,
            orientation: self.orientation,
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

/// Re-expresses a world-frame pose relative to `frame` (also world-frame).
pub fn transform_to_frame(p_world: &Pose, frame: &Pose) -> Pose {
    Pose {
        position: frame.apply_inverse(&p_world.position),
        orientation: frame.orientation.conjugate() * p_world.orientation,
    }
}
