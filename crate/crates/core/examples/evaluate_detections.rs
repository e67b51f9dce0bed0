//! Scores hand-made detections with R40 average precision.
//!
//! cargo run --example evaluate_detections

use std::collections::BTreeMap;

use mine3d::eval::{evaluate_frames, EvalConfig};
use mine3d::frames::{Detection, Difficulty, LabelRecord};
use mine3d::geom::Box3D;
use nalgebra::{Point3, Vector3};

fn main() -> mine3d::Result<()> {
    let size = Vector3::new(8.65, 23.9, 10.02);
    let gt = |x: f64, d: Difficulty| -> mine3d::Result<LabelRecord> {
        Ok(LabelRecord {
            bbox: Box3D::new(Point3::new(x, 0.0, 0.0), size, 0.0)?,
            class_name: "Excavator".into(),
            difficulty: d,
            num_points: Some(800),
        })
    };
    let det = |x: f64, z: f64, score: f64| -> mine3d::Result<Detection> {
        Ok(Detection {
            bbox: Box3D::new(Point3::new(x, 0.0, z), size, 0.0)?,
            class_name: "Excavator".into(),
            score,
        })
    };

    let mut gts = BTreeMap::new();
    let mut dets = BTreeMap::new();
    gts.insert(
        0,
        vec![
            gt(20.0, Difficulty::Easy)?,
            gt(-40.0, Difficulty::Moderate)?,
        ],
    );
    dets.insert(
        0,
        vec![
            det(20.3, 0.0, 0.9)?,
            det(-40.0, 4.0, 0.8)?,
            det(70.0, 0.0, 0.3)?,
        ],
    );
    gts.insert(1, vec![gt(50.0, Difficulty::Hard)?]);
    dets.insert(1, vec![det(50.0, 0.0, 0.7)?]);

    let report = evaluate_frames(&gts, &dets, &EvalConfig::default())?;
    print!("{}", report.render_table());
    println!(
        "{}",
        serde_json::to_string_pretty(&report.summary_json()).expect("summary serializes")
    );
    Ok(())
}
