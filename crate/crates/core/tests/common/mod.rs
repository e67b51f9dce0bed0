//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mine3d::frames::{Detection, Difficulty, LabelRecord};
use mine3d::geom::Box3D;
use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Membership by explicit rotation into the box frame.
pub fn in_yaw_box(p: &Point3<f64>, b: &Box3D, eps: f64) -> bool {
    let c = b.center();
    let s = b.size();
    let (dx, dy, dz) = (p.x - c.x, p.y - c.y, p.z - c.z);
    let t = -b.yaw();
    let lx = dx * t.cos() - dy * t.sin();
    let ly = dx * t.sin() + dy * t.cos();
    lx.abs() <= s.x / 2.0 + eps && ly.abs() <= s.y / 2.0 + eps && dz.abs() <= s.z / 2.0 + eps
}

fn world_aabb(b: &Box3D) -> (Point3<f64>, Point3<f64>) {
    let c = b.center();
    let s = b.size();
    let (sin, cos) = b.yaw().sin_cos();
    let ex = (s.x * cos.abs() + s.y * sin.abs()) / 2.0;
    let ey = (s.x * sin.abs() + s.y * cos.abs()) / 2.0;
    (
        Point3::new(c.x - ex, c.y - ey, c.z - s.z / 2.0),
        Point3::new(c.x + ex, c.y + ey, c.z + s.z / 2.0),
    )
}

struct Frame {
    c: Point3<f64>,
    half: Vector3<f64>,
    sin: f64,
    cos: f64,
}

impl Frame {
    fn new(b: &Box3D) -> Self {
        let (sin, cos) = b.yaw().sin_cos();
        Frame {
            c: b.center(),
            half: b.size() / 2.0,
            sin,
            cos,
        }
    }

    fn contains(&self, p: &Point3<f64>) -> bool {
        let (dx, dy) = (p.x - self.c.x, p.y - self.c.y);
        (dx * self.cos + dy * self.sin).abs() <= self.half.x
            && (-dx * self.sin + dy * self.cos).abs() <= self.half.y
            && (p.z - self.c.z).abs() <= self.half.z
    }
}

/// Monte-Carlo 3D IoU with `n` samples drawn in the joint bounding box.
/// Boxes with disjoint bounding boxes share no sample, so they return 0
/// without sampling.
pub fn mc_iou_3d(a: &Box3D, b: &Box3D, n: usize, rng: &mut impl Rng) -> f64 {
    let (alo, ahi) = world_aabb(a);
    let (blo, bhi) = world_aabb(b);
    if (0..3).any(|i| ahi[i] < blo[i] || bhi[i] < alo[i]) {
        return 0.0;
    }
    let lo = alo.inf(&blo);
    let ext = ahi.sup(&bhi) - lo;
    let (fa, fb) = (Frame::new(a), Frame::new(b));
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..n {
        let u: [f64; 3] = rng.random();
        let p = Point3::new(
            lo.x + u[0] * ext.x,
            lo.y + u[1] * ext.y,
            lo.z + u[2] * ext.z,
        );
        let (ia, ib) = (fa.contains(&p), fb.contains(&p));
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

pub fn random_box(rng: &mut impl Rng, center: f64, dims: (f64, f64)) -> Box3D {
    Box3D::new(
        Point3::new(
            rng.random_range(-center..=center),
            rng.random_range(-center..=center),
            rng.random_range(-center..=center),
        ),
        Vector3::new(
            rng.random_range(dims.0..=dims.1),
            rng.random_range(dims.0..=dims.1),
            rng.random_range(dims.0..=dims.1),
        ),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
    .unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Tp,
    Fp,
    Ignored,
}

/// Reference matcher: walks detections in descending score (stable), and
/// for each scans every ground truth to pick the best eligible unmatched one.
pub fn brute_match(
    gts: &[LabelRecord],
    dets: &[Detection],
    iou: impl Fn(&Box3D, &Box3D) -> f64,
    threshold: f64,
    eligible: impl Fn(&LabelRecord) -> bool,
) -> Vec<Verdict> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    // Insertion sort keeps equal scores in input order.
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && dets[idx[j - 1]].score < dets[idx[j]].score {
            idx.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut taken = vec![false; gts.len()];
    let mut out = vec![Verdict::Fp; dets.len()];
    for d in idx {
        let ious: Vec<f64> = gts.iter().map(|g| iou(&dets[d].bbox, &g.bbox)).collect();
        let mut pick: Option<usize> = None;
        for g in 0..gts.len() {
            if eligible(&gts[g]) && !taken[g] && ious[g] >= threshold {
                pick = match pick {
                    Some(p) if ious[p] >= ious[g] => Some(p),
                    _ => Some(g),
                };
            }
        }
        out[d] = if let Some(g) = pick {
            taken[g] = true;
            Verdict::Tp
        } else if (0..gts.len()).any(|g| !eligible(&gts[g]) && ious[g] >= threshold) {
            Verdict::Ignored
        } else {
            Verdict::Fp
        };
    }
    out
}

/// PR-staircase AP straight from the definition: at each recall position,
/// the best precision over every score threshold reaching that recall.
pub fn brute_ap(scored: &[(f64, bool)], total_gt: usize, positions: usize) -> f64 {
    if total_gt == 0 {
        return if scored.is_empty() { 100.0 } else { 0.0 };
    }
    let mut sum = 0.0;
    for k in 1..=positions {
        let mut best = 0.0f64;
        for &(tau, _) in scored {
            let kept: Vec<bool> = scored
                .iter()
                .filter(|(s, _)| *s >= tau)
                .map(|(_, t)| *t)
                .collect();
            let tp = kept.iter().filter(|t| **t).count();
            if tp * positions >= k * total_gt {
                best = best.max(tp as f64 / kept.len() as f64);
            }
        }
        sum += best;
    }
    sum * (100.0 / positions as f64)
}

pub fn label(bbox: Box3D, difficulty: Difficulty) -> LabelRecord {
    LabelRecord {
        bbox,
        class_name: "Excavator".into(),
        difficulty,
        num_points: None,
    }
}

pub fn det(bbox: Box3D, score: f64) -> Detection {
    Detection {
        bbox,
        class_name: "Excavator".into(),
        score,
    }
}

/// Relative path to file contents for every file under `root`.
pub fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<(PathBuf, Vec<u8>)> = walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            (
                e.path().strip_prefix(root).unwrap().to_path_buf(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

/// Signed angle difference folded into (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    if d > std::f64::consts::PI {
        d - 2.0 * std::f64::consts::PI
    } else {
        d
    }
}
