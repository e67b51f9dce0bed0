//! Frame-level augmentations that move points and boxes together.
//!
//! Every random step draws a single value per frame, so the whole scene
//! (points and all boxes) moves rigidly and point/box membership is kept.

use std::fs;
use std::path::Path;

use nalgebra::Point3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frames::{
    label_path, list_frame_ids, read_label_file, read_point_cloud, write_label_file,
    write_point_cloud, CloudFormat, DatasetLayout, LabelRecord, FRAMES_DIR, LABELS_DIR,
};
use crate::geom::{Box3D, PointCloud};
use crate::{Error, Result};

pub const DEFAULT_SCALE_RANGE: (f64, f64) = (0.95, 1.05);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentStep {
    /// One uniform offset per frame in `[min, max]`, applied along z.
    RandomAltitudeShift {
        min: f64,
        max: f64,
    },
    ConstantAltitudeShift {
        offset: f64,
    },
    /// One `Normal(0, std)` offset per frame along z.
    RandomWorldTranslationZ {
        std: f64,
    },
    /// Mirror across the x-z plane with probability `probability`.
    RandomFlipX {
        probability: f64,
    },
    /// Uniform scale about the sensor origin.
    GlobalScaling {
        min: f64,
        max: f64,
    },
}

impl AugmentStep {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentStep::RandomAltitudeShift { .. } => "random_altitude_shift",
            AugmentStep::ConstantAltitudeShift { .. } => "constant_altitude_shift",
            AugmentStep::RandomWorldTranslationZ { .. } => "random_world_translation_z",
            AugmentStep::RandomFlipX { .. } => "random_flip_x",
            AugmentStep::GlobalScaling { .. } => "global_scaling",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AugmentStep::RandomAltitudeShift { min, max } => {
                min.is_finite() && max.is_finite() && min <= max
            }
            AugmentStep::ConstantAltitudeShift { offset } => offset.is_finite(),
            AugmentStep::RandomWorldTranslationZ { std } => std.is_finite() && std >= 0.0,
            AugmentStep::RandomFlipX { probability } => (0.0..=1.0).contains(&probability),
            AugmentStep::GlobalScaling { min, max } => min > 0.0 && max.is_finite() && min <= max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid parameters for {}: {self:?}",
                self.name()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSpec {
    pub seed: u64,
    #[serde(default)]
    pub steps: Vec<AugmentStep>,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        self.steps.iter().try_for_each(AugmentStep::validate)
    }

    /// Random flip plus global scaling with the default range.
    pub fn standard(seed: u64) -> Self {
        AugmentSpec {
            seed,
            steps: vec![
                AugmentStep::RandomFlipX { probability: 0.5 },
                AugmentStep::GlobalScaling {
                    min: DEFAULT_SCALE_RANGE.0,
                    max: DEFAULT_SCALE_RANGE.1,
                },
            ],
        }
    }

    /// `standard` followed by `extra`.
    pub fn standard_plus(seed: u64, extra: AugmentStep) -> Self {
        let mut spec = AugmentSpec::standard(seed);
        spec.steps.push(extra);
        spec
    }
}

/// Parameter actually drawn for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedStep {
    pub step: String,
    /// Offset (m), scale factor, or 1/0 for flipped/not flipped.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedFrame {
    pub pcd: PointCloud,
    pub labels: Vec<LabelRecord>,
    pub applied: Vec<AppliedStep>,
}

impl AugmentedFrame {
    pub fn new(pcd: PointCloud, labels: Vec<LabelRecord>) -> Self {
        AugmentedFrame {
            pcd,
            labels,
            applied: Vec::new(),
        }
    }

    fn record(&mut self, step: &str, value: f64) {
        self.applied.push(AppliedStep {
            step: step.to_string(),
            value,
        });
    }

    fn map_boxes(&mut self, f: impl Fn(&Box3D) -> Box3D) {
        for l in &mut self.labels {
            l.bbox = f(&l.bbox);
        }
    }

    fn shift_z(&mut self, offset: f64) {
        self.pcd.map_points(|p| p.z += offset);
        self.map_boxes(|b| {
            let c = b.center();
            b.with_center(Point3::new(c.x, c.y, c.z + offset))
                .expect("shifted box stays valid")
        });
    }

    fn mirror_y(&mut self) {
        self.pcd.map_points(|p| p.y = -p.y);
        self.map_boxes(|b| {
            let c = b.center();
            Box3D::new(Point3::new(c.x, -c.y, c.z), b.size(), -b.yaw())
                .expect("mirrored box stays valid")
        });
    }

    fn scale(&mut self, s: f64) {
        self.pcd.map_points(|p| *p *= s);
        self.map_boxes(|b| {
            Box3D::new(b.center() * s, b.size() * s, b.yaw()).expect("scaled box stays valid")
        });
    }
}

/// Deterministic per-frame generator: one ChaCha stream per frame id, so
/// frames can be processed in any order or in parallel.
pub fn frame_rng(seed: u64, frame_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_id);
    rng
}

/// Adds `offset` to every point z and every box center z.
pub fn altitude_shift(pcd: PointCloud, labels: Vec<LabelRecord>, offset: f64) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    f.shift_z(offset);
    f.record("constant_altitude_shift", offset);
    f
}

pub fn random_altitude_shift(
    pcd: PointCloud,
    labels: Vec<LabelRecord>,
    min: f64,
    max: f64,
    rng: &mut impl Rng,
) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    apply_step(&mut f, &AugmentStep::RandomAltitudeShift { min, max }, rng);
    f
}

pub fn random_world_translation_z(
    pcd: PointCloud,
    labels: Vec<LabelRecord>,
    std: f64,
    rng: &mut impl Rng,
) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    apply_step(&mut f, &AugmentStep::RandomWorldTranslationZ { std }, rng);
    f
}

pub fn random_flip_x(
    pcd: PointCloud,
    labels: Vec<LabelRecord>,
    p: f64,
    rng: &mut impl Rng,
) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    apply_step(&mut f, &AugmentStep::RandomFlipX { probability: p }, rng);
    f
}

/// Unconditional mirror `y → -y`, `yaw → -yaw`.
pub fn flip(pcd: PointCloud, labels: Vec<LabelRecord>) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    f.mirror_y();
    f.record("random_flip_x", 1.0);
    f
}

pub fn global_scaling(
    pcd: PointCloud,
    labels: Vec<LabelRecord>,
    smin: f64,
    smax: f64,
    rng: &mut impl Rng,
) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    apply_step(
        &mut f,
        &AugmentStep::GlobalScaling {
            min: smin,
            max: smax,
        },
        rng,
    );
    f
}

/// Multiplies coordinates, box centers and box sizes by `s`.
pub fn scale(pcd: PointCloud, labels: Vec<LabelRecord>, s: f64) -> AugmentedFrame {
    let mut f = AugmentedFrame::new(pcd, labels);
    f.scale(s);
    f.record("global_scaling", s);
    f
}

fn apply_step(f: &mut AugmentedFrame, step: &AugmentStep, rng: &mut impl Rng) {
    match *step {
        AugmentStep::RandomAltitudeShift { min, max } => {
            let offset = rng.random_range(min..=max);
            f.shift_z(offset);
            f.record(step.name(), offset);
        }
        AugmentStep::ConstantAltitudeShift { offset } => {
            f.shift_z(offset);
            f.record(step.name(), offset);
        }
        AugmentStep::RandomWorldTranslationZ { std } => {
            let offset = Normal::new(0.0, std).expect("validated std").sample(rng);
            f.shift_z(offset);
            f.record(step.name(), offset);
        }
        AugmentStep::RandomFlipX { probability } => {
            let flipped = rng.random_bool(probability);
            if flipped {
                f.mirror_y();
            }
            f.record(step.name(), if flipped { 1.0 } else { 0.0 });
        }
        AugmentStep::GlobalScaling { min, max } => {
            let s = rng.random_range(min..=max);
            f.scale(s);
            f.record(step.name(), s);
        }
    }
}

/// Runs `spec` on one frame with the generator derived from `(spec.seed, frame_id)`.
pub fn apply_spec(
    pcd: PointCloud,
    labels: Vec<LabelRecord>,
    spec: &AugmentSpec,
    frame_id: u64,
) -> Result<AugmentedFrame> {
    spec.validate()?;
    let mut rng = frame_rng(spec.seed, frame_id);
    let mut f = AugmentedFrame::new(pcd, labels);
    for step in &spec.steps {
        apply_step(&mut f, step, &mut rng);
    }
    Ok(f)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub frames: usize,
    pub labels: usize,
}

#[derive(Serialize)]
struct LogEntry<'a> {
    frame_id: u64,
    applied: &'a [AppliedStep],
}

pub const AUGMENT_LOG: &str = "augment_log.json";

/// Augments `frames/` and `labels/` of `in_dir` into `out_dir`, keeping each
/// cloud's file format. Writes `augment_log.json` with every drawn parameter.
pub fn augment_dataset(
    in_dir: &Path,
    out_dir: &Path,
    spec: &AugmentSpec,
) -> Result<AugmentSummary> {
    spec.validate()?;
    if same_dir(in_dir, out_dir) {
        return Err(Error::invalid(
            "augment output directory must differ from its input",
        ));
    }
    let input = DatasetLayout::new(in_dir);
    let output = DatasetLayout::new(out_dir);
    let ids = list_frame_ids(&input.dir(FRAMES_DIR), "bin")?
        .into_iter()
        .map(|id| (id, CloudFormat::XyzBin))
        .chain(
            list_frame_ids(&input.dir(FRAMES_DIR), "ply")?
                .into_iter()
                .map(|id| (id, CloudFormat::Ply)),
        )
        .collect::<std::collections::BTreeMap<u64, CloudFormat>>();
    let labels_dir = input.dir(LABELS_DIR);
    for (&id, _) in &ids {
        let p = label_path(&labels_dir, id);
        if !p.is_file() {
            return Err(Error::invalid(format!(
                "frame {id}: missing label file {}",
                p.display()
            )));
        }
    }
    for d in [FRAMES_DIR, LABELS_DIR] {
        let p = output.dir(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }

    let frames: Vec<(u64, CloudFormat)> = ids.into_iter().collect();
    let results = frames
        .par_iter()
        .map(|&(id, format)| {
            let pcd = read_point_cloud(input.frame_cloud(id, format), format)?;
            let labels = read_label_file(label_path(&labels_dir, id))?;
            let out = apply_spec(pcd, labels, spec, id)?;
            write_point_cloud(output.frame_cloud(id, format), &out.pcd, format)?;
            write_label_file(output.label(id), &out.labels)?;
            Ok((id, out.labels.len(), out.applied))
        })
        .collect::<Result<Vec<_>>>()?;

    let log: Vec<LogEntry> = results
        .iter()
        .map(|(id, _, applied)| LogEntry {
            frame_id: *id,
            applied,
        })
        .collect();
    let log_path = out_dir.join(AUGMENT_LOG);
    let mut text =
        serde_json::to_string_pretty(&serde_json::json!({ "spec": spec, "frames": log }))
            .expect("augment log serializes");
    text.push('\n');
    fs::write(&log_path, text).map_err(|e| Error::io(&log_path, e))?;

    Ok(AugmentSummary {
        frames: results.len(),
        labels: results.iter().map(|r| r.1).sum(),
    })
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}
