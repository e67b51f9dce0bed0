//! Bird's-eye and 3D IoU between yaw-rotated boxes.
//!
//! cargo run --example rotated_iou

use std::f64::consts::FRAC_PI_4;

use mine3d::geom::{bev_iou, iou_3d, Box3D};
use nalgebra::{Point3, Vector3};

fn main() -> mine3d::Result<()> {
    let unit = Vector3::new(1.0, 1.0, 1.0);
    let a = Box3D::new(Point3::origin(), unit, 0.0)?;
    let b = Box3D::new(Point3::origin(), unit, FRAC_PI_4)?;
    println!(
        "square vs 45 degree square: BEV {:.6}, 3D {:.6}",
        bev_iou(&a, &b),
        iou_3d(&a, &b)
    );

    let excavator = Vector3::new(8.65, 23.9, 10.02);
    let gt = Box3D::new(Point3::new(30.0, 5.0, -1.0), excavator, 0.6)?;
    for dz in [0.0, 2.0, 5.0, 10.0] {
        let det = Box3D::new(Point3::new(30.5, 5.2, -1.0 + dz), excavator, 0.62)?;
        println!(
            "vertical offset {dz:>4} m: BEV {:.4}, 3D {:.4}",
            bev_iou(&gt, &det),
            iou_3d(&gt, &det)
        );
    }
    Ok(())
}
