//! `poses.json`: recorded sensor and object poses, one entry per frame.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{FrameRecord, ObjectInstance};
use crate::geom::{Pose, Quaternion};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct PoseLog {
    frames: Vec<RawFrame>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFrame {
    frame_id: u64,
    sensor_pose: RawPose,
    #[serde(default)]
    objects: Vec<RawObject>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPose {
    position: [f64; 3],
    /// w, qx, qy, qz
    orientation: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
struct RawObject {
    name: String,
    class_name: String,
    size: [f64; 3],
    pose: RawPose,
}

impl RawPose {
    fn to_pose(&self, what: impl Fn() -> String) -> Result<Pose> {
        let [w, x, y, z] = self.orientation;
        let q =
            Quaternion::new(w, x, y, z).map_err(|e| Error::invalid(format!("{}: {e}", what())))?;
        if !self.position.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("{}: non-finite position", what())));
        }
        Ok(Pose::new(Point3::from(self.position), q))
    }

    fn from_pose(p: &Pose) -> Self {
        RawPose {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: p.orientation.to_array(),
        }
    }
}

/// Parses a pose log from a JSON string; `path` is only used in messages.
pub fn parse_pose_log(text: &str, path: &Path) -> Result<Vec<FrameRecord>> {
    let log: PoseLog = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;

    let mut seen = BTreeSet::new();
    let mut frames = Vec::with_capacity(log.frames.len());
    for raw in log.frames {
        let id = raw.frame_id;
        if !seen.insert(id) {
            return Err(Error::invalid(format!(
                "duplicate frame_id {id} in {}",
                path.display()
            )));
        }
        let sensor_pose = raw
            .sensor_pose
            .to_pose(|| format!("frame {id}: sensor pose"))?;
        let objects = raw
            .objects
            .into_iter()
            .map(|o| {
                let pose = o
                    .pose
                    .to_pose(|| format!("frame {id}: object {}", o.name))?;
                Ok(ObjectInstance {
                    size: Vector3::from(o.size),
                    pose,
                    name: o.name,
                    class_name: o.class_name,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let frame = FrameRecord {
            frame_id: id,
            sensor_pose,
            objects,
        };
        frame.validate()?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn read_pose_log(path: impl AsRef<Path>) -> Result<Vec<FrameRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pose_log(&text, path)
}

pub fn pose_log_to_string(frames: &[FrameRecord]) -> String {
    let log = PoseLog {
        frames: frames
            .iter()
            .map(|f| RawFrame {
                frame_id: f.frame_id,
                sensor_pose: RawPose::from_pose(&f.sensor_pose),
                objects: f
                    .objects
                    .iter()
                    .map(|o| RawObject {
                        name: o.name.clone(),
                        class_name: o.class_name.clone(),
                        size: [o.size.x, o.size.y, o.size.z],
                        pose: RawPose::from_pose(&o.pose),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&log).expect("pose log serializes");
    s.push('\n');
    s
}

pub fn write_pose_log(path: impl AsRef<Path>, frames: &[FrameRecord]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pose_log_to_string(frames)).map_err(|e| Error::io(path, e))
}
