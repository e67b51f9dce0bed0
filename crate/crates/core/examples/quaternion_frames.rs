//! Converts between quaternions, Euler angles and rotation matrices, then
//! expresses an object pose in a tilted sensor frame.
//!
//! cargo run --example quaternion_frames

use std::f64::consts::FRAC_PI_2;

use mine3d::geom::{transform_to_frame, EulerAngles, Pose, Quaternion};
use nalgebra::{Point3, Vector3};

fn main() -> mine3d::Result<()> {
    let q = Quaternion::from_euler(EulerAngles {
        roll: 0.1,
        pitch: -0.2,
        yaw: 1.2,
    });
    let e = q.to_euler();
    println!("q = {:?}", q.to_array());
    println!(
        "euler = roll {:.3} pitch {:.3} yaw {:.3}",
        e.roll, e.pitch, e.yaw
    );
    println!("R =\n{:.4}", q.rotation_matrix());

    let quarter = Quaternion::from_axis_angle(Vector3::z(), FRAC_PI_2)?;
    println!(
        "z-quarter turn maps x to {:.3?}",
        quarter.rotate(Vector3::x()).as_slice()
    );

    let sensor = Pose::new(
        Point3::new(0.0, 0.0, 16.0),
        Quaternion::from_axis_angle(Vector3::y(), 0.05)?,
    );
    let excavator = Pose::new(Point3::new(40.0, -10.0, 0.0), Quaternion::from_yaw(0.8));
    let rel = transform_to_frame(&excavator, &sensor);
    let re = rel.orientation.to_euler();
    println!(
        "excavator in sensor frame: position {:.3?}, yaw {:.4}, pitch {:.4}",
        rel.position.coords.as_slice(),
        re.yaw,
        re.pitch
    );
    Ok(())
}
