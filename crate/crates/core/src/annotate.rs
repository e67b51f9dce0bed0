//! Automatic annotation: pose log + sensor-frame clouds → labels, crops and
//! per-point semantic classes.
//!
//! For every object the base pose is lifted by half its height along world z,
//! re-expressed in the sensor frame, cropped with the full rotation, and
//! labelled with its heading (yaw) only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frames::{
    read_point_cloud, read_pose_log, write_gt_database, write_label_file, write_semantic_csv,
    BackgroundPolicy, ClassRegistry, DatasetLayout, Difficulty, FrameRecord, LabelRecord,
    BACKGROUND_CLASS_ID, GT_DATABASE_DIR, LABELS_DIR, SEMANTIC_DIR,
};
use crate::geom::{point_in_box, transform_to_frame, Box3D, OrientedBoxFull, PointCloud};
use crate::{Error, Result};

/// Roll or pitch beyond this (rad) makes the yaw-only label noticeably lossy.
pub const TILT_WARNING_RAD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRange {
    pub x_half_extent: f64,
    pub y_half_extent: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for DetectionRange {
    fn default() -> Self {
        DetectionRange {
            x_half_extent: 175.2 / 2.0,
            y_half_extent: 175.2 / 2.0,
            z_min: -12.0,
            z_max: 4.0,
        }
    }
}

impl DetectionRange {
    pub fn contains(&self, b: &Box3D) -> bool {
        let c = b.center();
        c.x.abs() <= self.x_half_extent
            && c.y.abs() <= self.y_half_extent
            && c.z >= self.z_min
            && c.z <= self.z_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    /// Objects with fewer in-box points are dropped from labels and crops.
    pub min_points: usize,
    pub height_threshold_m: f64,
    /// Strictly more points than this is "dense".
    pub density_easy: usize,
    /// Fewer points than this is below every difficulty tier.
    pub density_floor: usize,
    pub emit_background: bool,
    pub detection_range: DetectionRange,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            min_points: 100,
            height_threshold_m: 10.0,
            density_easy: 750,
            density_floor: 100,
            emit_background: true,
            detection_range: DetectionRange::default(),
        }
    }
}

impl AnnotateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.density_floor > self.density_easy {
            return Err(Error::invalid("density_floor must not exceed density_easy"));
        }
        if !(self.height_threshold_m >= 0.0) {
            return Err(Error::invalid("height_threshold_m must be non-negative"));
        }
        let r = &self.detection_range;
        if !(r.z_min < r.z_max) || !(r.x_half_extent > 0.0) || !(r.y_half_extent > 0.0) {
            return Err(Error::invalid(
                "detection_range needs z_min < z_max and positive half extents",
            ));
        }
        Ok(())
    }

    fn background_policy(&self) -> BackgroundPolicy {
        if self.emit_background {
            BackgroundPolicy::Include
        } else {
            BackgroundPolicy::ForegroundOnly
        }
    }
}

/// Difficulty tier from sensor-to-object height variation and in-box point
/// count. `None` means the object is too sparse for any tier.
///
/// Both thresholds are strict: `h == 10` is not "below 10 m" and
/// `n == 750` is not "more than 750 points".
pub fn classify_difficulty(
    height_variation_m: f64,
    num_points: usize,
    cfg: &AnnotateConfig,
) -> Option<Difficulty> {
    if num_points < cfg.density_floor {
        return None;
    }
    let level = height_variation_m < cfg.height_threshold_m;
    let dense = num_points > cfg.density_easy;
    Some(match (level, dense) {
        (true, true) => Difficulty::Easy,
        (true, false) | (false, true) => Difficulty::Moderate,
        (false, false) => Difficulty::Hard,
    })
}

/// Vertical offset between the sensor origin and the box center, for a box
/// already expressed in the sensor frame.
pub fn height_variation(box_in_sensor_frame: &Box3D) -> f64 {
    box_in_sensor_frame.center().z.abs()
}

/// Sensor-frame geometry of one object.
#[derive(Debug, Clone)]
pub struct ObjectGeometry {
    pub label_box: Box3D,
    pub crop_box: OrientedBoxFull,
    pub roll: f64,
    pub pitch: f64,
}

/// Lifts the object's base pose to its geometric center, moves it into the
/// sensor frame and derives both the cropping box and the heading box.
pub fn object_geometry(frame: &FrameRecord, idx: usize) -> Result<ObjectGeometry> {
    let obj = &frame.objects[idx];
    let lifted = obj
        .pose
        .translated(Vector3::new(0.0, 0.0, obj.size.z / 2.0));
    let in_sensor = transform_to_frame(&lifted, &frame.sensor_pose);
    let crop_box = OrientedBoxFull::new(
        in_sensor.position,
        obj.size,
        in_sensor.orientation.rotation_matrix(),
    )?;
    let euler = in_sensor.orientation.to_euler();
    let label_box = Box3D::new(in_sensor.position, obj.size, euler.yaw)?;
    Ok(ObjectGeometry {
        label_box,
        crop_box,
        roll: euler.roll,
        pitch: euler.pitch,
    })
}

#[derive(Debug, Clone, Default)]
pub struct FrameAnnotation {
    pub frame_id: u64,
    pub labels: Vec<LabelRecord>,
    /// Object name of each label, parallel to `labels`.
    pub label_objects: Vec<String>,
    pub crops: BTreeMap<String, PointCloud>,
    /// Class id per input point; 0 is background.
    pub per_point_class: Vec<u32>,
    /// Objects dropped for having fewer than `min_points` points.
    pub filtered: Vec<String>,
    pub out_of_range: Vec<String>,
    /// Points claimed by more than one emitted object.
    pub overlapping_points: usize,
}

/// Indices of points inside `b`, with a bounding-sphere reject first.
fn points_in_box(pcd: &PointCloud, b: &OrientedBoxFull) -> Vec<usize> {
    let c = b.center();
    let r = b.size().norm() / 2.0 + 1e-6;
    let r2 = r * r;
    pcd.points()
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - c).norm_squared() <= r2 && point_in_box(p, b))
        .map(|(i, _)| i)
        .collect()
}

pub fn annotate_frame(
    frame: &FrameRecord,
    pcd: &PointCloud,
    cfg: &AnnotateConfig,
    registry: &ClassRegistry,
) -> Result<FrameAnnotation> {
    let mut out = FrameAnnotation {
        frame_id: frame.frame_id,
        per_point_class: vec![BACKGROUND_CLASS_ID; pcd.len()],
        ..Default::default()
    };

    for (idx, obj) in frame.objects.iter().enumerate() {
        let class = registry.by_name(&obj.class_name).ok_or_else(|| {
            Error::invalid(format!(
                "frame {}: object {} has class {:?}, which is not in the class registry",
                frame.frame_id, obj.name, obj.class_name
            ))
        })?;
        let geom = object_geometry(frame, idx)?;
        if geom.roll.abs() > TILT_WARNING_RAD || geom.pitch.abs() > TILT_WARNING_RAD {
            warn!(
                "frame {}: object {} is tilted (roll {:.3}, pitch {:.3} rad); label keeps heading only",
                frame.frame_id, obj.name, geom.roll, geom.pitch
            );
        }

        let inside = points_in_box(pcd, &geom.crop_box);
        let n = inside.len();
        if n < cfg.min_points {
            out.filtered.push(obj.name.clone());
            continue;
        }
        if !cfg.detection_range.contains(&geom.label_box) {
            warn!(
                "frame {}: object {} lies outside the detection range",
                frame.frame_id, obj.name
            );
            out.out_of_range.push(obj.name.clone());
        }

        let h = height_variation(&geom.label_box);
        // Only reachable when min_points is below the density floor.
        let difficulty = classify_difficulty(h, n, cfg).unwrap_or(Difficulty::Hard);

        let mut overlaps = 0;
        for &i in &inside {
            if out.per_point_class[i] != BACKGROUND_CLASS_ID {
                overlaps += 1;
            }
            out.per_point_class[i] = class.id;
        }
        if overlaps > 0 {
            warn!(
                "frame {}: object {} overlaps an earlier object on {overlaps} points; later object wins",
                frame.frame_id, obj.name
            );
            out.overlapping_points += overlaps;
        }

        let mut mask = vec![false; pcd.len()];
        inside.iter().for_each(|&i| mask[i] = true);
        out.crops.insert(obj.name.clone(), pcd.select(|i| mask[i]));
        out.labels.push(LabelRecord {
            bbox: geom.label_box,
            class_name: obj.class_name.clone(),
            difficulty,
            num_points: Some(n),
        });
        out.label_objects.push(obj.name.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateSummary {
    pub frames: usize,
    pub labels: usize,
    pub filtered: usize,
    pub out_of_range: usize,
    pub overlapping_points: usize,
}

const STAGING_DIR: &str = ".mine3d-annotate-staging";

/// Annotates every frame of a dataset. Outputs (`labels/`, `semantic/`,
/// `gt_database/`) go under `out_root`, by default the dataset root. They are
/// staged first and only moved into place when every frame succeeded, so a
/// failed run leaves no partial output behind.
pub fn annotate_dataset(
    dataset_dir: &Path,
    out_root: Option<&Path>,
    cfg: &AnnotateConfig,
    registry: &ClassRegistry,
) -> Result<AnnotateSummary> {
    cfg.validate()?;
    let layout = DatasetLayout::new(dataset_dir);
    let frames = read_pose_log(layout.pose_log())?;
    let clouds = frames
        .iter()
        .map(|f| layout.find_frame_cloud(f.frame_id))
        .collect::<Result<Vec<_>>>()?;

    let out_root = out_root.unwrap_or(dataset_dir).to_path_buf();
    fs::create_dir_all(&out_root).map_err(|e| Error::io(&out_root, e))?;
    let staging = out_root.join(STAGING_DIR);
    remove_dir_if_exists(&staging)?;
    let staged = DatasetLayout::new(&staging);
    for d in [LABELS_DIR, SEMANTIC_DIR, GT_DATABASE_DIR] {
        let p = staged.dir(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }

    let results: Vec<Result<FrameAnnotation>> = frames
        .par_iter()
        .zip(clouds.par_iter())
        .map(|(frame, (path, format))| {
            let pcd = read_point_cloud(path, *format)?;
            let ann = annotate_frame(frame, &pcd, cfg, registry)?;
            write_frame_outputs(&staged, &ann, &pcd, cfg, registry)?;
            Ok(ann)
        })
        .collect();

    let mut summary = AnnotateSummary::default();
    for r in results {
        match r {
            Ok(ann) => {
                summary.frames += 1;
                summary.labels += ann.labels.len();
                summary.filtered += ann.filtered.len();
                summary.out_of_range += ann.out_of_range.len();
                summary.overlapping_points += ann.overlapping_points;
            }
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                return Err(e);
            }
        }
    }

    for d in [LABELS_DIR, SEMANTIC_DIR, GT_DATABASE_DIR] {
        let target = out_root.join(d);
        remove_dir_if_exists(&target)?;
        fs::rename(staged.dir(d), &target).map_err(|e| Error::io(&target, e))?;
    }
    fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    Ok(summary)
}

fn write_frame_outputs(
    staged: &DatasetLayout,
    ann: &FrameAnnotation,
    pcd: &PointCloud,
    cfg: &AnnotateConfig,
    registry: &ClassRegistry,
) -> Result<()> {
    write_label_file(staged.label(ann.frame_id), &ann.labels)?;
    write_semantic_csv(
        staged.semantic(ann.frame_id),
        pcd,
        &ann.per_point_class,
        registry,
        cfg.background_policy(),
    )?;
    for (name, crop) in &ann.crops {
        write_gt_database(staged.root(), ann.frame_id, name, crop)?;
    }
    Ok(())
}

fn remove_dir_if_exists(p: &PathBuf) -> Result<()> {
    match fs::remove_dir_all(p) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(p, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::ObjectInstance;
    use crate::geom::{Pose, Quaternion};
    use nalgebra::Point3;

    #[test]
    fn rubric_examples() {
        let cfg = AnnotateConfig::default();
        assert_eq!(classify_difficulty(5.0, 1000, &cfg), Some(Difficulty::Easy));
        assert_eq!(classify_difficulty(15.0, 500, &cfg), Some(Difficulty::Hard));
        assert_eq!(
            classify_difficulty(10.0, 800, &cfg),
            Some(Difficulty::Moderate)
        );
        assert_eq!(classify_difficulty(5.0, 99, &cfg), None);
        assert_eq!(
            classify_difficulty(5.0, 750, &cfg),
            Some(Difficulty::Moderate)
        );
        assert_eq!(
            classify_difficulty(12.0, 751, &cfg),
            Some(Difficulty::Moderate)
        );
        assert_eq!(classify_difficulty(0.0, 0, &cfg), None);
    }

    #[test]
    fn height_is_absolute_center_z() {
        let b = |z| Box3D::new(Point3::new(3.0, 1.0, z), Vector3::repeat(2.0), 0.0).unwrap();
        assert_eq!(height_variation(&b(0.0)), 0.0);
        assert_eq!(height_variation(&b(-12.0)), 12.0);
    }

    #[test]
    fn config_validation() {
        assert!(AnnotateConfig::default().validate().is_ok());
        let cfg = AnnotateConfig {
            density_floor: 800,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = AnnotateConfig::default();
        cfg.detection_range.z_min = 5.0;
        assert!(cfg.validate().is_err());
        let parsed: AnnotateConfig = serde_json::from_str(r#"{"min_points": 0}"#).unwrap();
        assert_eq!(parsed.min_points, 0);
        assert_eq!(parsed.density_easy, 750);
        assert!(serde_json::from_str::<AnnotateConfig>(r#"{"min_pts": 0}"#).is_err());
    }

    fn frame_with(objects: Vec<ObjectInstance>) -> FrameRecord {
        FrameRecord {
            frame_id: 4,
            sensor_pose: Pose::from_translation(0.0, 0.0, 2.0),
            objects,
        }
    }

    fn cube(name: &str, class: &str, x: f64) -> ObjectInstance {
        ObjectInstance {
            name: name.into(),
            class_name: class.into(),
            size: Vector3::repeat(2.0),
            pose: Pose::new(Point3::new(x, 0.0, 0.0), Quaternion::IDENTITY),
        }
    }

    /// `n` points on a line inside the cube at `x` (sensor frame, sensor at z=2).
    fn points_in_cube(x: f64, n: usize) -> Vec<Point3<f64>> {
        (0..n)
            .map(|i| Point3::new(x - 0.9 + 1.8 * i as f64 / n as f64, 0.1, -1.5))
            .collect()
    }

    #[test]
    fn no_objects() {
        let pcd = PointCloud::from_points(points_in_cube(0.0, 10)).unwrap();
        let ann = annotate_frame(
            &frame_with(vec![]),
            &pcd,
            &AnnotateConfig::default(),
            &ClassRegistry::default(),
        )
        .unwrap();
        assert!(ann.labels.is_empty() && ann.crops.is_empty());
        assert_eq!(ann.per_point_class, vec![0; 10]);
    }

    #[test]
    fn sparse_object_is_filtered() {
        let mut pts = points_in_cube(10.0, 50);
        pts.extend(points_in_cube(20.0, 150));
        let pcd = PointCloud::from_points(pts).unwrap();
        let frame = frame_with(vec![
            cube("a", "Excavator", 10.0),
            cube("b", "Excavator", 20.0),
        ]);
        let ann = annotate_frame(
            &frame,
            &pcd,
            &AnnotateConfig::default(),
            &ClassRegistry::default(),
        )
        .unwrap();
        assert_eq!(ann.labels.len(), 1);
        assert_eq!(ann.label_objects, vec!["b".to_string()]);
        assert_eq!(ann.filtered, vec!["a".to_string()]);
        assert!(ann.per_point_class[..50].iter().all(|&c| c == 0));
        assert!(ann.per_point_class[50..].iter().all(|&c| c == 1));
        assert_eq!(ann.labels[0].num_points, Some(150));
        assert_eq!(ann.crops["b"].len(), 150);
        // Center lifted by dz/2 and moved into the sensor frame.
        assert_eq!(ann.labels[0].bbox.center(), Point3::new(20.0, 0.0, -1.0));
        assert_eq!(ann.labels[0].difficulty, Difficulty::Moderate);
    }

    #[test]
    fn sparse_object_kept_when_filter_disabled() {
        let pcd = PointCloud::from_points(points_in_cube(10.0, 50)).unwrap();
        let cfg = AnnotateConfig {
            min_points: 0,
            ..Default::default()
        };
        let ann = annotate_frame(
            &frame_with(vec![cube("a", "Excavator", 10.0)]),
            &pcd,
            &cfg,
            &ClassRegistry::default(),
        )
        .unwrap();
        assert_eq!(ann.labels.len(), 1);
        assert_eq!(ann.labels[0].difficulty, Difficulty::Hard);
    }

    #[test]
    fn unknown_class() {
        let err = annotate_frame(
            &frame_with(vec![cube("a", "Dozer", 10.0)]),
            &PointCloud::empty(),
            &AnnotateConfig::default(),
            &ClassRegistry::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("Dozer"));
    }

    #[test]
    fn overlapping_boxes_last_wins() {
        let reg = ClassRegistry::new(vec![
            crate::frames::ClassEntry {
                name: "Excavator".into(),
                id: 1,
                color: [255, 0, 0],
            },
            crate::frames::ClassEntry {
                name: "Truck".into(),
                id: 2,
                color: [0, 0, 255],
            },
        ])
        .unwrap();
        let pcd = PointCloud::from_points(points_in_cube(10.0, 20)).unwrap();
        let cfg = AnnotateConfig {
            min_points: 0,
            ..Default::default()
        };
        let frame = frame_with(vec![cube("a", "Excavator", 10.0), cube("b", "Truck", 10.5)]);
        let ann = annotate_frame(&frame, &pcd, &cfg, &reg).unwrap();
        let in_b = ann.crops["b"].len();
        assert!(in_b > 0 && ann.overlapping_points == in_b);
        assert_eq!(
            ann.per_point_class.iter().filter(|&&c| c == 2).count(),
            in_b
        );
    }
}
