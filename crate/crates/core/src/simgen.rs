//! Synthetic mine scenes: excavator-sized boxes on a stepped pit/bench
//! terrain, scanned by a spinning multi-beam LiDAR model.
//!
//! The terrain is two horizontal planes joined by a vertical wall at world
//! `x = wall_distance`: the sensor's side (`x < wall`) and the far side. The
//! sensor sits at the world origin on a mast above its side's ground.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::{classify_difficulty, AnnotateConfig};
use crate::augment::frame_rng;
use crate::eval::labels_as_detections;
use crate::frames::{
    label_path, write_detection_file, write_label_file, write_point_cloud, write_pose_log,
    CloudFormat, DatasetLayout, Difficulty, FrameRecord, LabelRecord, ObjectInstance, FRAMES_DIR,
    TRUTH_DETS_DIR, TRUTH_DIR,
};
use crate::geom::{
    bev_intersection_area, normalize_yaw, Box3D, PointCloud, Pose, Quaternion, BOX_EPSILON,
};
use crate::{Error, Result};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
pub const DEFAULT_CLASS: &str = "Excavator";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Sensor and objects on one flat level.
    #[default]
    SameLevel,
    /// Sensor on the pit floor; objects in the pit or up on the bench.
    SensorInPit,
    /// Sensor on the bench top; objects down in the pit.
    SensorOnBench,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::SameLevel,
        Scenario::SensorInPit,
        Scenario::SensorOnBench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SameLevel => "same-level",
            Scenario::SensorInPit => "sensor-in-pit",
            Scenario::SensorOnBench => "sensor-on-bench",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown scenario {s:?}; expected same-level, sensor-in-pit or sensor-on-bench"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub scenario: Scenario,
    pub bench_height_m: f64,
    pub n_objects: usize,
    pub object_dims: [f64; 3],
    /// Object boxes stay inside a disk of this radius around the sensor.
    pub area_half_extent_m: f64,
    pub seed: u64,
    /// Sensor origin above its own ground level.
    pub sensor_height_m: f64,
    /// Horizontal distance from the sensor to the wall; scenario default
    /// when unset (35 m in the pit, 10 m on the bench).
    pub wall_distance_m: Option<f64>,
    /// Minimum clearance between object footprints and from the wall.
    pub clearance_m: f64,
    /// Minimum horizontal distance from the sensor to an object center.
    pub min_object_distance_m: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            scenario: Scenario::SameLevel,
            bench_height_m: 11.0,
            n_objects: 5,
            object_dims: [8.65, 23.9, 10.02],
            area_half_extent_m: 175.2 / 2.0,
            seed: 0,
            sensor_height_m: 5.0,
            wall_distance_m: None,
            clearance_m: 1.0,
            min_object_distance_m: 15.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bench_height_m > 0.0 && self.bench_height_m.is_finite()) {
            return Err(Error::invalid("bench_height_m must be positive"));
        }
        if !self.object_dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return Err(Error::invalid("object_dims must be positive"));
        }
        if !(self.area_half_extent_m > 0.0) || !(self.sensor_height_m >= 0.0) {
            return Err(Error::invalid(
                "area_half_extent_m must be positive and sensor_height_m non-negative",
            ));
        }
        if !(self.clearance_m >= 0.0) || !(self.min_object_distance_m >= 0.0) {
            return Err(Error::invalid(
                "clearance_m and min_object_distance_m must be non-negative",
            ));
        }
        if self.wall_distance_m.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::invalid("wall_distance_m must be positive"));
        }
        Ok(())
    }

    pub fn wall_distance(&self) -> f64 {
        self.wall_distance_m.unwrap_or(match self.scenario {
            Scenario::SensorOnBench => 10.0,
            _ => 35.0,
        })
    }

    pub fn terrain(&self) -> Terrain {
        let b = self.bench_height_m;
        let w = self.wall_distance();
        match self.scenario {
            Scenario::SameLevel => Terrain::Flat { level: 0.0 },
            Scenario::SensorInPit => Terrain::Stepped {
                wall_x: w,
                near_level: 0.0,
                far_level: b,
            },
            Scenario::SensorOnBench => Terrain::Stepped {
                wall_x: w,
                near_level: b,
                far_level: 0.0,
            },
        }
    }

    fn dims(&self) -> Vector3<f64> {
        Vector3::from(self.object_dims)
    }
}

/// Ground geometry in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Terrain {
    None,
    Flat {
        level: f64,
    },
    /// `near_level` for `x < wall_x`, `far_level` beyond, and a vertical
    /// wall at `x = wall_x` between the two.
    Stepped {
        wall_x: f64,
        near_level: f64,
        far_level: f64,
    },
}

impl Terrain {
    pub fn level_at(&self, x: f64) -> Option<f64> {
        match *self {
            Terrain::None => None,
            Terrain::Flat { level } => Some(level),
            Terrain::Stepped {
                wall_x,
                near_level,
                far_level,
            } => Some(if x < wall_x { near_level } else { far_level }),
        }
    }

    /// Nearest ray parameter `t > t_min` at which `origin + t * dir` meets
    /// the ground or wall.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
        let plane = |level: f64| -> Option<f64> {
            let t = (level - origin.z) / dir.z;
            (t.is_finite() && t > t_min).then_some(t)
        };
        match *self {
            Terrain::None => None,
            Terrain::Flat { level } => plane(level),
            Terrain::Stepped {
                wall_x,
                near_level,
                far_level,
            } => {
                let mut best: Option<f64> = None;
                let mut take = |t: f64| {
                    if best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                };
                if let Some(t) = plane(near_level).filter(|t| origin.x + t * dir.x < wall_x) {
                    take(t);
                }
                if let Some(t) = plane(far_level).filter(|t| origin.x + t * dir.x >= wall_x) {
                    take(t);
                }
                let t = (wall_x - origin.x) / dir.x;
                if t.is_finite() && t > t_min {
                    let z = origin.z + t * dir.z;
                    if z >= near_level.min(far_level) && z <= near_level.max(far_level) {
                        take(t);
                    }
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub channels: usize,
    pub vertical_fov_deg: f64,
    pub points_per_rotation: usize,
    /// Magnitude bounds of the uniform range error, applied with a random sign.
    pub range_noise_m: (f64, f64),
    pub noise: bool,
    pub max_range_m: f64,
    pub min_range_m: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            channels: 128,
            vertical_fov_deg: 22.5,
            points_per_rotation: 2048,
            range_noise_m: (0.025, 0.08),
            noise: true,
            max_range_m: 200.0,
            min_range_m: 1.0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.points_per_rotation == 0 {
            return Err(Error::invalid(
                "channels and points_per_rotation must be at least 1",
            ));
        }
        if !(self.vertical_fov_deg > 0.0 && self.vertical_fov_deg < 180.0) {
            return Err(Error::invalid("vertical_fov_deg must lie in (0, 180)"));
        }
        let (lo, hi) = self.range_noise_m;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::invalid("range_noise_m needs 0 <= min <= max"));
        }
        if !(self.min_range_m >= 0.0 && self.min_range_m < self.max_range_m) {
            return Err(Error::invalid("need 0 <= min_range_m < max_range_m"));
        }
        Ok(())
    }

    /// Unit ray directions in the sensor frame, channel-major.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        let fov = self.vertical_fov_deg.to_radians();
        let mut dirs = Vec::with_capacity(self.channels * self.points_per_rotation);
        for c in 0..self.channels {
            let el = if self.channels == 1 {
                0.0
            } else {
                -fov / 2.0 + fov * c as f64 / (self.channels - 1) as f64
            };
            for a in 0..self.points_per_rotation {
                let az = 2.0 * PI * a as f64 / self.points_per_rotation as f64;
                dirs.push(Vector3::new(
                    el.cos() * az.cos(),
                    el.cos() * az.sin(),
                    el.sin(),
                ));
            }
        }
        dirs
    }
}

/// One frame's world: the recorded frame plus its ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub frame: FrameRecord,
    pub terrain: Terrain,
}

fn sensor_yaw(frame: &FrameRecord) -> f64 {
    frame.sensor_pose.orientation.to_euler().yaw
}

fn sample_frame(cfg: &SceneConfig, frame_id: u64, rng: &mut impl Rng) -> Result<Scene> {
    let terrain = cfg.terrain();
    let sensor_level = terrain.level_at(0.0).unwrap_or(0.0);
    let sensor_pose = Pose::new(
        Point3::new(0.0, 0.0, sensor_level + cfg.sensor_height_m),
        Quaternion::from_yaw(uniform_yaw(rng)),
    );
    let dims = cfg.dims();
    let circ = 0.5 * dims.x.hypot(dims.y);
    let (r_min, r_max) = (cfg.min_object_distance_m, cfg.area_half_extent_m - circ);
    if r_max <= r_min {
        return Err(Error::invalid(
            "area_half_extent_m is too small for the object footprint",
        ));
    }
    let padded = dims + Vector3::new(cfg.clearance_m, cfg.clearance_m, 0.0);

    let mut placed: Vec<Box3D> = Vec::new();
    let mut objects = Vec::with_capacity(cfg.n_objects);
    for k in 0..cfg.n_objects {
        let mut found = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let r = rng.random_range(r_min * r_min..r_max * r_max).sqrt();
            let theta = rng.random_range(-PI..PI);
            let yaw = uniform_yaw(rng);
            let (x, y) = (r * theta.cos(), r * theta.sin());
            let Some(level) = footprint_level(cfg, &terrain, x, yaw) else {
                continue;
            };
            let candidate = Box3D::new(Point3::new(x, y, 0.0), padded, yaw)?;
            if placed
                .iter()
                .all(|b| bev_intersection_area(b, &candidate) == 0.0)
            {
                found = Some((candidate, level, yaw));
                break;
            }
        }
        let Some((b, level, yaw)) = found else {
            return Err(Error::invalid(format!(
                "frame {frame_id}: could not place object {k} after {MAX_PLACEMENT_ATTEMPTS} attempts; \
                 try fewer objects or a larger area"
            )));
        };
        let c = b.center();
        objects.push(ObjectInstance {
            name: format!("exc_{k}"),
            class_name: DEFAULT_CLASS.to_string(),
            size: dims,
            pose: Pose::new(Point3::new(c.x, c.y, level), Quaternion::from_yaw(yaw)),
        });
        placed.push(b);
    }
    Ok(Scene {
        frame: FrameRecord {
            frame_id,
            sensor_pose,
            objects,
        },
        terrain,
    })
}

fn uniform_yaw(rng: &mut impl Rng) -> f64 {
    normalize_yaw(rng.random_range(-PI..PI))
}

/// Ground level under a candidate footprint, or `None` if the footprint is
/// not allowed there (straddles the wall, or wrong level for the scenario).
fn footprint_level(cfg: &SceneConfig, terrain: &Terrain, x: f64, yaw: f64) -> Option<f64> {
    let Terrain::Stepped {
        wall_x,
        far_level,
        near_level,
    } = *terrain
    else {
        return terrain.level_at(x);
    };
    let (hx, hy) = (cfg.object_dims[0] / 2.0, cfg.object_dims[1] / 2.0);
    let half_width_x = hx * yaw.cos().abs() + hy * yaw.sin().abs();
    let c = cfg.clearance_m;
    if x - half_width_x >= wall_x + c {
        Some(far_level)
    } else if x + half_width_x <= wall_x - c && cfg.scenario == Scenario::SensorInPit {
        Some(near_level)
    } else {
        None
    }
}

/// Draws `n_frames` independent scenes; frame `k` uses the stream
/// `frame_rng(seed, k)`.
pub fn generate_scene(cfg: &SceneConfig, n_frames: usize) -> Result<Vec<Scene>> {
    cfg.validate()?;
    (0..n_frames as u64)
        .map(|id| sample_frame(cfg, id, &mut frame_rng(cfg.seed, id)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitSource {
    Object(usize),
    Ground,
}

/// Scan output: points in the sensor frame with the surface each ray hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub cloud: PointCloud,
    pub sources: Vec<HitSource>,
}

impl Scan {
    pub fn hits_on(&self, object: usize) -> usize {
        self.sources
            .iter()
            .filter(|s| **s == HitSource::Object(object))
            .count()
    }
}

struct WorldBox {
    center: Point3<f64>,
    half: Vector3<f64>,
    /// Columns are the box axes in world coordinates.
    rot: nalgebra::Matrix3<f64>,
}

/// Ray/box slab test; entry parameter when the ray starts outside.
fn slab(b: &WorldBox, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
    let o = b.rot.transpose() * (origin - b.center);
    let d = b.rot.transpose() * dir;
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i].abs() > b.half[i] {
                return None;
            }
            continue;
        }
        let a = (-b.half[i] - o[i]) / d[i];
        let c = (b.half[i] - o[i]) / d[i];
        t0 = t0.max(a.min(c));
        t1 = t1.min(a.max(c));
    }
    (t0 <= t1 && t0 > t_min).then_some(t0)
}

/// Casts every ray of one rotation from the sensor pose. Range noise, when
/// enabled, is drawn from `rng` in ray order after casting.
pub fn scan(
    frame: &FrameRecord,
    terrain: &Terrain,
    lidar: &LidarConfig,
    rng: &mut impl Rng,
) -> Scan {
    let sensor = frame.sensor_pose;
    let boxes: Vec<WorldBox> = frame
        .objects
        .iter()
        .map(|o| WorldBox {
            center: o.pose.position + Vector3::new(0.0, 0.0, o.size.z / 2.0),
            half: o.size / 2.0,
            rot: o.pose.orientation.rotation_matrix(),
        })
        .collect();
    let origin = sensor.position;
    let hits: Vec<Option<(Vector3<f64>, f64, HitSource)>> = lidar
        .directions()
        .into_par_iter()
        .map(|d_sensor| {
            let d = sensor.orientation.rotate(d_sensor);
            let mut best = terrain
                .intersect(&origin, &d, lidar.min_range_m)
                .map(|t| (t, HitSource::Ground));
            for (i, b) in boxes.iter().enumerate() {
                if let Some(t) = slab(b, &origin, &d, lidar.min_range_m) {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, HitSource::Object(i)));
                    }
                }
            }
            best.filter(|(t, _)| *t <= lidar.max_range_m)
                .map(|(t, s)| (d_sensor, t, s))
        })
        .collect();

    let mut points = Vec::new();
    let mut sources = Vec::new();
    let (lo, hi) = lidar.range_noise_m;
    for (d, t, s) in hits.into_iter().flatten() {
        let t = if lidar.noise {
            let m = if lo < hi {
                rng.random_range(lo..=hi)
            } else {
                lo
            };
            if rng.random_bool(0.5) {
                t + m
            } else {
                t - m
            }
        } else {
            t
        };
        points.push(Point3::from(d * t));
        sources.push(s);
    }
    Scan {
        cloud: PointCloud::from_points(points).expect("ray hits are finite"),
        sources,
    }
}

/// Sensor-frame box of object `idx`, from planar yaw arithmetic.
pub fn truth_box(frame: &FrameRecord, idx: usize) -> Result<Box3D> {
    let o = &frame.objects[idx];
    let s = &frame.sensor_pose.position;
    let psi = sensor_yaw(frame);
    let (dx, dy) = (o.pose.position.x - s.x, o.pose.position.y - s.y);
    let (sin, cos) = psi.sin_cos();
    let center = Point3::new(
        cos * dx + sin * dy,
        -sin * dx + cos * dy,
        o.pose.position.z + o.size.z / 2.0 - s.z,
    );
    let yaw = o.pose.orientation.to_euler().yaw - psi;
    Box3D::new(center, o.size, yaw)
}

fn count_inside(cloud: &PointCloud, b: &Box3D) -> usize {
    let c = b.center();
    let (sin, cos) = b.yaw().sin_cos();
    let h = b.size() / 2.0;
    cloud
        .points()
        .iter()
        .filter(|p| {
            let (dx, dy) = (p.x - c.x, p.y - c.y);
            (cos * dx + sin * dy).abs() <= h.x + BOX_EPSILON
                && (-sin * dx + cos * dy).abs() <= h.y + BOX_EPSILON
                && (p.z - c.z).abs() <= h.z + BOX_EPSILON
        })
        .count()
}

/// Exact labels for a scanned frame under the given annotation rules.
pub fn truth_labels(
    frame: &FrameRecord,
    cloud: &PointCloud,
    cfg: &AnnotateConfig,
) -> Result<Vec<LabelRecord>> {
    let mut labels = Vec::new();
    for (i, o) in frame.objects.iter().enumerate() {
        let bbox = truth_box(frame, i)?;
        let n = count_inside(cloud, &bbox);
        if n < cfg.min_points {
            continue;
        }
        let h = bbox.center().z.abs();
        labels.push(LabelRecord {
            bbox,
            class_name: o.class_name.clone(),
            difficulty: classify_difficulty(h, n, cfg).unwrap_or(Difficulty::Hard),
            num_points: Some(n),
        });
    }
    Ok(labels)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub frames: usize,
    pub points: usize,
    pub objects: usize,
    pub truth_labels: usize,
    /// Truth label counts per difficulty level.
    pub difficulty_histogram: [usize; 3],
}

/// Writes a full dataset: `poses.json`, `frames/`, plus exact labels in
/// `truth/` and the same boxes as score-1 detections in `truth-as-dets/`.
pub fn generate_dataset(
    scene_cfg: &SceneConfig,
    lidar: &LidarConfig,
    n_frames: usize,
    out_dir: &Path,
    truth_cfg: &AnnotateConfig,
    format: CloudFormat,
) -> Result<GenerateSummary> {
    scene_cfg.validate()?;
    lidar.validate()?;
    truth_cfg.validate()?;
    let layout = DatasetLayout::new(out_dir);
    for d in [FRAMES_DIR, TRUTH_DIR, TRUTH_DETS_DIR] {
        let p = layout.dir(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }

    let frames: Vec<(FrameRecord, usize, Vec<LabelRecord>)> = (0..n_frames as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = frame_rng(scene_cfg.seed, id);
            let scene = sample_frame(scene_cfg, id, &mut rng)?;
            let s = scan(&scene.frame, &scene.terrain, lidar, &mut rng);
            let labels = truth_labels(&scene.frame, &s.cloud, truth_cfg)?;
            write_point_cloud(layout.frame_cloud(id, format), &s.cloud, format)?;
            write_label_file(label_path(&layout.dir(TRUTH_DIR), id), &labels)?;
            write_detection_file(
                label_path(&layout.dir(TRUTH_DETS_DIR), id),
                &labels_as_detections(&labels, 1.0),
            )?;
            Ok((scene.frame, s.cloud.len(), labels))
        })
        .collect::<Result<_>>()?;

    let mut summary = GenerateSummary {
        frames: frames.len(),
        ..Default::default()
    };
    for (f, n, labels) in &frames {
        summary.points += n;
        summary.objects += f.objects.len();
        summary.truth_labels += labels.len();
        for l in labels {
            summary.difficulty_histogram[l.difficulty.level() as usize] += 1;
        }
    }
    let records: Vec<FrameRecord> = frames.into_iter().map(|(f, _, _)| f).collect();
    write_pose_log(layout.pose_log(), &records)?;
    Ok(summary)
}
