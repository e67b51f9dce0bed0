//! Data model and file formats for frames, labels, semantic CSVs and crops.
//!
//! Layout of a dataset root:
//!
//! ```text
//! poses.json                              recorded sensor/object poses
//! frames/{frame_id:06}.bin | .ply         sensor-frame point clouds
//! labels/{frame_id:06}.txt                x y z dx dy dz yaw class difficulty
//! semantic/{frame_id:06}.csv              x,y,z,r,g,b,class_id
//! gt_database/Crop_3d_{frame_id:06}_{object}.ply
//! ```

mod cloud_io;
mod dataset;
mod labels;
mod model;
mod poselog;

pub use cloud_io::{
    decode_ply, decode_xyz_bin, encode_ply, encode_xyz_bin, read_point_cloud, write_point_cloud,
    CloudFormat,
};
pub use dataset::*;
pub use labels::*;
pub use model::{
    ClassEntry, ClassRegistry, Detection, Difficulty, FrameRecord, LabelRecord, ObjectInstance,
    BACKGROUND_CLASS_ID, BACKGROUND_COLOR,
};
pub use poselog::{parse_pose_log, pose_log_to_string, read_pose_log, write_pose_log};
