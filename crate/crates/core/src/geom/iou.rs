//! Rotated-box overlap in bird's-eye view and in 3D.

use std::cmp::Ordering;

use super::Box3D;

/// Intersections smaller than this (m²) are collinear slivers and count as zero.
pub const SLIVER_AREA: f64 = 1e-12;

type Vertex = [f64; 2];

fn cross(o: Vertex, a: Vertex, b: Vertex) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Clips `subject` by the convex, counter-clockwise polygon `clip`
/// (Sutherland–Hodgman).
pub fn clip_convex(subject: &[Vertex], clip: &[Vertex]) -> Vec<Vertex> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let dc = cross(a, b, cur);
            let dp = cross(a, b, prev);
            if dc >= 0.0 {
                if dp < 0.0 {
                    output.push(lerp(prev, cur, dp / (dp - dc)));
                }
                output.push(cur);
            } else if dp >= 0.0 {
                output.push(lerp(prev, cur, dp / (dp - dc)));
            }
        }
    }
    output
}

fn lerp(p: Vertex, q: Vertex, t: f64) -> Vertex {
    [p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]
}

/// Shoelace area; positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[Vertex]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    twice / 2.0
}

fn box_order(a: &Box3D, b: &Box3D) -> Ordering {
    let ka = [
        a.center().x,
        a.center().y,
        a.center().z,
        a.size().x,
        a.size().y,
        a.size().z,
        a.yaw(),
    ];
    let kb = [
        b.center().x,
        b.center().y,
        b.center().z,
        b.size().x,
        b.size().y,
        b.size().z,
        b.yaw(),
    ];
    ka.iter()
        .zip(&kb)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Footprint intersection area. The pair is put in a canonical order first
/// so the result does not depend on argument order.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let (a, b) = match box_order(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    // Cheap reject on circumscribed circles.
    let reach = (a.size().x.hypot(a.size().y) + b.size().x.hypot(b.size().y)) / 2.0;
    let d = (a.center().x - b.center().x).hypot(a.center().y - b.center().y);
    if d > reach {
        return 0.0;
    }
    let area = polygon_area(&clip_convex(&a.bev_corners(), &b.bev_corners()));
    if area < SLIVER_AREA {
        0.0
    } else {
        area.min(a.bev_area()).min(b.bev_area())
    }
}

fn z_overlap(a: &Box3D, b: &Box3D) -> f64 {
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.bev_area() + b.bev_area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let h = z_overlap(a, b);
    if h <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * h;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}
