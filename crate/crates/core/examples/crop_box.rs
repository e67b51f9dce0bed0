//! Crops the points inside an oriented box with full rotation.
//!
//! cargo run --example crop_box

use mine3d::geom::{crop, EulerAngles, OrientedBoxFull, PointCloud, Quaternion};
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mine3d::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points: Vec<Point3<f64>> = (0..100_000)
        .map(|_| {
            Point3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-5.0..5.0),
            )
        })
        .collect();
    let cloud = PointCloud::from_points(points)?;

    let tilt = Quaternion::from_euler(EulerAngles {
        roll: 0.0,
        pitch: 0.3,
        yaw: 0.9,
    });
    let b = OrientedBoxFull::new(
        Point3::new(2.0, -1.0, 0.5),
        Vector3::new(4.0, 6.0, 3.0),
        tilt.rotation_matrix(),
    )?;
    let inside = crop(&cloud, &b);
    let expected = cloud.len() as f64 * (4.0 * 6.0 * 3.0) / (20.0 * 20.0 * 10.0);
    println!(
        "kept {} of {} points (volume ratio predicts {:.0})",
        inside.len(),
        cloud.len(),
        expected
    );
    Ok(())
}
