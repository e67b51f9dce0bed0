mod common;

use std::collections::BTreeMap;

use mine3d::annotate::{annotate_dataset, annotate_frame, AnnotateConfig, AnnotateSummary};
use mine3d::eval::{evaluate, evaluate_frames, DifficultyMode, EvalConfig, Metric};
use mine3d::frames::{
    label_path, read_label_file, read_pose_log, read_semantic_csv, write_detection_file,
    write_point_cloud, write_pose_log, ClassRegistry, CloudFormat, DatasetLayout, Detection,
    Difficulty, FrameRecord, ObjectInstance, GT_DATABASE_DIR, LABELS_DIR, SEMANTIC_DIR, TRUTH_DIR,
};
use mine3d::geom::{Box3D, PointCloud, Pose, Quaternion};
use mine3d::simgen::{
    generate_dataset, generate_scene, scan, truth_box, HitSource, LidarConfig, Scenario,
    SceneConfig, Terrain,
};
use nalgebra::{Point3, Vector3};
use rand::Rng;

fn object(name: &str, size: Vector3<f64>, pose: Pose) -> ObjectInstance {
    ObjectInstance {
        name: name.into(),
        class_name: "Excavator".into(),
        size,
        pose,
    }
}

/// Uniform samples on the faces of a yaw-rotated box given by its base pose.
fn surface_points(
    base: Point3<f64>,
    size: Vector3<f64>,
    yaw: f64,
    n: usize,
    r: &mut impl Rng,
) -> Vec<Point3<f64>> {
    let (s, c) = yaw.sin_cos();
    (0..n)
        .map(|i| {
            let mut l = Vector3::new(
                r.random_range(-0.5..0.5) * size.x,
                r.random_range(-0.5..0.5) * size.y,
                r.random_range(-0.5..0.5) * size.z,
            );
            let axis = i % 3;
            l[axis] = if i % 2 == 0 { 0.5 } else { -0.5 } * size[axis];
            Point3::new(
                base.x + c * l.x - s * l.y,
                base.y + s * l.x + c * l.y,
                base.z + size.z / 2.0 + l.z,
            )
        })
        .collect()
}

#[test]
fn synthetic_box_is_labelled_exactly() {
    let mut r = common::rng(1);
    let size = Vector3::new(8.65, 23.9, 10.02);
    let base = Point3::new(30.0, -12.0, -5.0);
    let frame = FrameRecord {
        frame_id: 0,
        sensor_pose: Pose::IDENTITY,
        objects: vec![object(
            "exc_0",
            size,
            Pose::new(base, Quaternion::from_yaw(0.4)),
        )],
    };
    let pcd = PointCloud::from_points(surface_points(base, size, 0.4, 5000, &mut r)).unwrap();
    let ann = annotate_frame(
        &frame,
        &pcd,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    let l = &ann.labels[0];
    assert!((l.bbox.center() - Point3::new(30.0, -12.0, 0.01)).amax() < 1e-9);
    assert!((l.bbox.yaw() - 0.4).abs() < 1e-12);
    assert_eq!(l.num_points, Some(5000));
    assert_eq!(l.difficulty, Difficulty::Easy);
    assert!(ann.per_point_class.iter().all(|&c| c == 1));
}

#[test]
fn sparse_object_stays_background() {
    let mut r = common::rng(2);
    let size = Vector3::new(2.0, 2.0, 2.0);
    let mut pts = surface_points(Point3::new(5.0, 0.0, 0.0), size, 0.0, 50, &mut r);
    pts.extend(surface_points(
        Point3::new(-5.0, 0.0, 0.0),
        size,
        0.0,
        300,
        &mut r,
    ));
    let frame = FrameRecord {
        frame_id: 3,
        sensor_pose: Pose::IDENTITY,
        objects: vec![
            object("sparse", size, Pose::from_translation(5.0, 0.0, 0.0)),
            object("dense", size, Pose::from_translation(-5.0, 0.0, 0.0)),
        ],
    };
    let pcd = PointCloud::from_points(pts).unwrap();
    let ann = annotate_frame(
        &frame,
        &pcd,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    assert_eq!(ann.filtered, vec!["sparse".to_string()]);
    assert_eq!(ann.label_objects, vec!["dense".to_string()]);
    assert!(ann.per_point_class[..50].iter().all(|&c| c == 0));
    assert!(ann.per_point_class[50..].iter().all(|&c| c == 1));
    assert_eq!(ann.labels[0].difficulty, Difficulty::Moderate);
}

#[test]
fn empty_frame_annotation() {
    let pcd = PointCloud::from_points(vec![Point3::new(1.0, 1.0, 1.0)]).unwrap();
    let frame = FrameRecord {
        frame_id: 0,
        sensor_pose: Pose::IDENTITY,
        objects: vec![],
    };
    let ann = annotate_frame(
        &frame,
        &pcd,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    assert!(ann.labels.is_empty());
    assert_eq!(ann.per_point_class, vec![0]);
}

#[test]
fn dataset_annotation_is_idempotent_and_atomic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    let scene = SceneConfig {
        scenario: Scenario::SensorInPit,
        seed: 4,
        ..SceneConfig::default()
    };
    generate_dataset(
        &scene,
        &LidarConfig::default(),
        4,
        &d,
        &AnnotateConfig::default(),
        CloudFormat::XyzBin,
    )
    .unwrap();
    let s1 = annotate_dataset(
        &d,
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    let first = common::tree(&d);
    annotate_dataset(
        &d,
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    assert_eq!(common::tree(&d), first);
    assert_eq!(s1.frames, 4);
    for id in 0..4 {
        let layout = DatasetLayout::new(&d);
        assert!(layout.semantic(id).is_file());
        let rows = read_semantic_csv(layout.semantic(id)).unwrap();
        let cloud = mine3d::frames::read_point_cloud(
            layout.frame_cloud(id, CloudFormat::XyzBin),
            CloudFormat::XyzBin,
        );
        assert_eq!(rows.len(), cloud.unwrap().len());
    }

    // A frame whose class is unknown fails the run and leaves no output.
    let e = tmp.path().join("e");
    generate_dataset(
        &scene,
        &LidarConfig::default(),
        2,
        &e,
        &AnnotateConfig::default(),
        CloudFormat::Ply,
    )
    .unwrap();
    let mut frames = read_pose_log(e.join("poses.json")).unwrap();
    frames[1].objects[0].class_name = "Crane".into();
    write_pose_log(e.join("poses.json"), &frames).unwrap();
    let err = annotate_dataset(
        &e,
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("Crane"));
    for dir in [LABELS_DIR, SEMANTIC_DIR, GT_DATABASE_DIR] {
        assert!(!e.join(dir).exists(), "{dir} left behind");
    }
    assert_eq!(std::fs::read_dir(&e).unwrap().count(), 4);

    // Missing cloud file is reported before any work.
    std::fs::remove_file(e.join("frames/000001.ply")).unwrap();
    let err = annotate_dataset(
        &e,
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("1"), "{err}");
}

#[test]
fn empty_pose_log() {
    let tmp = tempfile::tempdir().unwrap();
    let s = generate_dataset(
        &SceneConfig::default(),
        &LidarConfig::default(),
        0,
        tmp.path(),
        &AnnotateConfig::default(),
        CloudFormat::Ply,
    )
    .unwrap();
    assert_eq!(s.frames, 0);
    assert!(read_pose_log(tmp.path().join("poses.json"))
        .unwrap()
        .is_empty());
    let summary = annotate_dataset(
        tmp.path(),
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    assert_eq!(summary, AnnotateSummary::default());
}

#[test]
fn scan_points_lie_on_surfaces() {
    let lidar = LidarConfig {
        noise: false,
        channels: 64,
        ..LidarConfig::default()
    };
    for scenario in Scenario::ALL {
        let cfg = SceneConfig {
            scenario,
            seed: 21,
            ..SceneConfig::default()
        };
        for s in generate_scene(&cfg, 2).unwrap() {
            let out = scan(&s.frame, &s.terrain, &lidar, &mut common::rng(0));
            let sensor = s.frame.sensor_pose;
            let boxes: Vec<Box3D> = (0..s.frame.objects.len())
                .map(|i| truth_box(&s.frame, i).unwrap())
                .collect();
            let Terrain::Stepped {
                wall_x,
                near_level,
                far_level,
            } = s.terrain
            else {
                assert_eq!(s.terrain, Terrain::Flat { level: 0.0 });
                continue;
            };
            for (p, src) in out.cloud.points().iter().zip(&out.sources) {
                let dist = match src {
                    HitSource::Object(i) => {
                        let b = &boxes[*i];
                        let (sin, cos) = b.yaw().sin_cos();
                        let d = p - b.center();
                        let l = Vector3::new(cos * d.x + sin * d.y, -sin * d.x + cos * d.y, d.z);
                        let h = b.size() / 2.0;
                        assert!((0..3).all(|k| l[k].abs() <= h[k] + 1e-9));
                        (0..3)
                            .map(|k| h[k] - l[k].abs())
                            .fold(f64::INFINITY, f64::min)
                    }
                    HitSource::Ground => {
                        let w = sensor.apply(p);
                        (w.z - near_level)
                            .abs()
                            .min((w.z - far_level).abs())
                            .min((w.x - wall_x).abs())
                    }
                };
                assert!(
                    dist < 1e-9,
                    "{scenario:?}: point {p:?} from {src:?} is {dist} off its surface"
                );
            }
        }
    }
}

#[test]
fn difficulty_histograms_follow_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let mut hist = BTreeMap::new();
    for (scenario, frames) in [
        (Scenario::SameLevel, 8),
        (Scenario::SensorInPit, 6),
        (Scenario::SensorOnBench, 7),
    ] {
        let cfg = SceneConfig {
            scenario,
            seed: 5,
            ..SceneConfig::default()
        };
        let dir = tmp.path().join(scenario.name());
        let s = generate_dataset(
            &cfg,
            &LidarConfig::default(),
            frames,
            &dir,
            &AnnotateConfig::default(),
            CloudFormat::Ply,
        )
        .unwrap();
        hist.insert(scenario.name(), s.difficulty_histogram);
    }
    let (same, pit, bench) = (
        hist["same-level"],
        hist["sensor-in-pit"],
        hist["sensor-on-bench"],
    );
    assert!(same[0] > same[1] + same[2], "{same:?}");
    assert_eq!(bench[0], 0, "{bench:?}");
    assert!(pit[0] > 0 && pit[1] + pit[2] > 0, "{pit:?}");
    assert!(same != pit && pit != bench && same != bench);
}

fn shifted_dets(dir: &std::path::Path, out: &std::path::Path, delta: f64) {
    std::fs::create_dir_all(out).unwrap();
    for id in 0..20 {
        let labels = read_label_file(label_path(&dir.join(TRUTH_DIR), id)).unwrap();
        let dets: Vec<Detection> = labels
            .iter()
            .map(|l| {
                let (s, c) = l.bbox.yaw().sin_cos();
                let moved = l.bbox.center() + Vector3::new(c * delta, s * delta, 0.0);
                Detection {
                    bbox: l.bbox.with_center(moved).unwrap(),
                    class_name: l.class_name.clone(),
                    score: 1.0,
                }
            })
            .collect();
        write_detection_file(label_path(out, id), &dets).unwrap();
    }
}

#[test]
fn ap_switches_at_closed_form_offset() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    let cfg = SceneConfig {
        scenario: Scenario::SensorInPit,
        seed: 8,
        ..SceneConfig::default()
    };
    generate_dataset(
        &cfg,
        &LidarConfig::default(),
        20,
        &d,
        &AnnotateConfig::default(),
        CloudFormat::Ply,
    )
    .unwrap();
    // Sliding a box along its own length L by t leaves IoU = (L - t) / (L + t).
    let l = cfg.object_dims[0];
    let critical = l * (1.0 - 0.7) / (1.0 + 0.7);
    for (factor, want) in [(0.99, 100.0), (1.01, 0.0)] {
        let out = tmp.path().join(format!("det-{factor}"));
        shifted_dets(&d, &out, critical * factor);
        let report = evaluate(&d.join(TRUTH_DIR), &out, &EvalConfig::default()).unwrap();
        for e in &report.entries {
            assert_eq!(e.ap, want, "{factor}: {:?} {:?}", e.metric, e.difficulty);
        }
    }
}

#[test]
fn evaluation_contracts() {
    let b =
        |x: f64| Box3D::new(Point3::new(x, 0.0, 0.0), Vector3::new(4.0, 2.0, 2.0), 0.0).unwrap();
    let mut gts = BTreeMap::new();
    gts.insert(
        0u64,
        vec![
            common::label(b(0.0), Difficulty::Easy),
            common::label(b(10.0), Difficulty::Moderate),
            common::label(b(20.0), Difficulty::Hard),
        ],
    );
    let none: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
    let r = evaluate_frames(&gts, &none, &EvalConfig::default()).unwrap();
    assert!(r.entries.iter().all(|e| e.ap == 0.0));

    let mut dets = BTreeMap::new();
    dets.insert(0u64, vec![common::det(b(20.0), 0.9)]);
    let nested = evaluate_frames(&gts, &dets, &EvalConfig::default()).unwrap();
    let strict = evaluate_frames(
        &gts,
        &dets,
        &EvalConfig {
            difficulty_mode: DifficultyMode::Strict,
            ..EvalConfig::default()
        },
    )
    .unwrap();
    let ap = |r: &mine3d::eval::EvalReport, d| r.map(Metric::ThreeD, d).unwrap();
    assert_eq!(ap(&nested, Difficulty::Easy), 0.0);
    assert_eq!(nested.entries[0].ignored_detections, 1);
    // Recall 1/3 reaches 13 of 40 positions at precision 1.
    assert!((ap(&nested, Difficulty::Hard) - 32.5).abs() < 1e-9);
    assert_eq!(ap(&strict, Difficulty::Hard), 100.0);

    let tmp = tempfile::tempdir().unwrap();
    let (g, d) = (tmp.path().join("g"), tmp.path().join("d"));
    std::fs::create_dir_all(&g).unwrap();
    std::fs::create_dir_all(&d).unwrap();
    mine3d::frames::write_label_file(label_path(&g, 1), &gts[&0]).unwrap();
    write_detection_file(label_path(&d, 1), &[]).unwrap();
    write_detection_file(label_path(&d, 42), &[]).unwrap();
    let err = evaluate(&g, &d, &EvalConfig::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("42"), "{err}");
}

#[test]
fn xyz_bin_datasets_annotate_too() {
    let tmp = tempfile::tempdir().unwrap();
    let layout = DatasetLayout::new(tmp.path());
    std::fs::create_dir_all(layout.dir("frames")).unwrap();
    let size = Vector3::new(2.0, 2.0, 2.0);
    let frames: Vec<FrameRecord> = (0..3)
        .map(|id| FrameRecord {
            frame_id: id,
            sensor_pose: Pose::from_translation(0.0, 0.0, 1.0),
            objects: vec![object("exc_0", size, Pose::from_translation(4.0, 0.0, 0.0))],
        })
        .collect();
    let mut r = common::rng(9);
    for f in &frames {
        let pts: Vec<Point3<f64>> = (0..400)
            .map(|_| {
                Point3::new(
                    r.random_range(3.1..4.9),
                    r.random_range(-0.9..0.9),
                    r.random_range(-0.9..0.9),
                )
            })
            .collect();
        let pcd = PointCloud::from_points(pts).unwrap();
        write_point_cloud(
            layout.frame_cloud(f.frame_id, CloudFormat::XyzBin),
            &pcd,
            CloudFormat::XyzBin,
        )
        .unwrap();
    }
    write_pose_log(layout.pose_log(), &frames).unwrap();
    let s = annotate_dataset(
        tmp.path(),
        None,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )
    .unwrap();
    assert_eq!((s.frames, s.labels), (3, 3));
    let labels = read_label_file(layout.label(2)).unwrap();
    assert!((labels[0].bbox.center() - Point3::new(4.0, 0.0, 0.0)).amax() < 1e-12);
    assert_eq!(labels[0].difficulty, Difficulty::Moderate);
}
