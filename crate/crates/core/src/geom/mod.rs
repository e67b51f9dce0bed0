//! Rotation algebra, oriented boxes, point membership and rotated IoU.

mod boxes;
mod cloud;
mod iou;
mod pose;
mod quaternion;

pub use boxes::{normalize_yaw, point_in_box, Box3D, OrientedBoxFull, BOX_EPSILON};
pub use cloud::{crop, PointCloud, Rgb};
pub use iou::{bev_intersection_area, bev_iou, clip_convex, iou_3d, polygon_area, SLIVER_AREA};
pub use pose::{transform_to_frame, Pose};
pub use quaternion::{EulerAngles, Quaternion, MIN_QUATERNION_NORM};

pub fn quaternion_to_euler(q: &Quaternion) -> EulerAngles {
    q.to_euler()
}

pub fn rotation_matrix(q: &Quaternion) -> nalgebra::Matrix3<f64> {
    q.rotation_matrix()
}
