//! Applies an augmentation spec and checks that every point keeps its box.
//!
//! cargo run --example altitude_shift

use mine3d::augment::{apply_spec, AugmentSpec, AugmentStep};
use mine3d::frames::{Difficulty, LabelRecord};
use mine3d::geom::{Box3D, PointCloud};
use nalgebra::{Point3, Vector3};

fn count_inside(cloud: &PointCloud, labels: &[LabelRecord]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| cloud.points().iter().filter(|p| l.bbox.contains(p)).count())
        .collect()
}

fn main() -> mine3d::Result<()> {
    let labels = vec![LabelRecord {
        bbox: Box3D::new(
            Point3::new(25.0, 4.0, -6.0),
            Vector3::new(8.65, 23.9, 10.02),
            0.4,
        )?,
        class_name: "Excavator".into(),
        difficulty: Difficulty::Moderate,
        num_points: None,
    }];
    let points = (0..2000)
        .map(|i| {
            let t = i as f64 / 2000.0;
            Point3::new(
                15.0 + 20.0 * t,
                -10.0 + 28.0 * (t * 7.0).fract(),
                -12.0 + 12.0 * (t * 13.0).fract(),
            )
        })
        .collect();
    let cloud = PointCloud::from_points(points)?;
    let before = count_inside(&cloud, &labels);

    let spec = AugmentSpec::standard_plus(
        11,
        AugmentStep::RandomAltitudeShift {
            min: -11.0,
            max: 11.0,
        },
    );
    for frame_id in 0..4 {
        let out = apply_spec(cloud.clone(), labels.clone(), &spec, frame_id)?;
        let drawn: Vec<String> = out
            .applied
            .iter()
            .map(|a| format!("{}={:.3}", a.step, a.value))
            .collect();
        println!(
            "frame {frame_id}: {} | box z {:+.3} | inside {:?} (was {:?})",
            drawn.join(" "),
            out.labels[0].bbox.center().z,
            count_inside(&out.pcd, &out.labels),
            before
        );
    }
    Ok(())
}
