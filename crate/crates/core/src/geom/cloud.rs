use nalgebra::Point3;

use super::{point_in_box, OrientedBoxFull};
use crate::{Error, Result};

pub type Rgb = [u8; 3];

/// LiDAR points in meters with optional per-point color.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    colors: Option<Vec<Rgb>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>, colors: Option<Vec<Rgb>>) -> Result<Self> {
        if let Some(c) = &colors {
            if c.len() != points.len() {
                return Err(Error::invalid(format!(
                    "{} colors supplied for {} points",
                    c.len(),
                    points.len()
                )));
            }
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(PointCloud { points, colors })
    }

    pub fn from_points(points: Vec<Point3<f64>>) -> Result<Self> {
        PointCloud::new(points, None)
    }

    pub fn empty() -> Self {
        PointCloud::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn into_parts(self) -> (Vec<Point3<f64>>, Option<Vec<Rgb>>) {
        (self.points, self.colors)
    }

    /// Applies `f` to every point. Callers must keep coordinates finite.
    pub(crate) fn map_points(&mut self, f: impl Fn(&mut Point3<f64>)) {
        self.points.iter_mut().for_each(f);
    }

    /// Keeps the points whose index passes `keep`, preserving order and colors.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> PointCloud {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| idx.iter().map(|&i| c[i]).collect()),
        }
    }
}

/// Points of `pcd` inside `b` (boundary inclusive), in input order.
pub fn crop(pcd: &PointCloud, b: &OrientedBoxFull) -> PointCloud {
    let pts = pcd.points();
    pcd.select(|i| point_in_box(&pts[i], b))
}
