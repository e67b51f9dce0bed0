//! KITTI-style detector scoring: greedy IoU matching, average precision over
//! R40 recall positions, split by difficulty tier, in BEV and 3D.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::frames::Detection;
use crate::frames::{
    label_path, list_frame_ids, read_detection_file, read_label_file, Difficulty, LabelRecord,
};
use crate::geom::{bev_iou, iou_3d, Box3D};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "BEV")]
    Bev,
    #[serde(rename = "3D")]
    ThreeD,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Bev, Metric::ThreeD];

    pub fn iou(self, a: &Box3D, b: &Box3D) -> f64 {
        match self {
            Metric::Bev => bev_iou(a, b),
            Metric::ThreeD => iou_3d(a, b),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Bev => "BEV",
            Metric::ThreeD => "3D",
        }
    }
}

/// How ground truths of other tiers are treated when scoring a tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyMode {
    /// Tier `d` scores every ground truth with difficulty `<= d`; harder
    /// ones are ignored.
    #[default]
    Nested,
    /// Tier `d` scores only difficulty-`d` ground truths; all others are
    /// ignored.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub recall_positions: usize,
    pub difficulties: Vec<Difficulty>,
    pub metrics: Vec<Metric>,
    /// Ground truths with a known point count below this are ignored.
    pub min_points: usize,
    pub classes: Vec<String>,
    pub difficulty_mode: DifficultyMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: 0.7,
            recall_positions: 40,
            difficulties: Difficulty::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            min_points: 100,
            classes: vec!["Excavator".to_string()],
            difficulty_mode: DifficultyMode::Nested,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::invalid("iou_threshold must lie in (0, 1]"));
        }
        if self.recall_positions == 0 {
            return Err(Error::invalid("recall_positions must be at least 1"));
        }
        if self.classes.is_empty() {
            return Err(Error::invalid("at least one class must be evaluated"));
        }
        Ok(())
    }

    fn params(&self, metric: Metric, difficulty: Difficulty) -> MatchParams {
        MatchParams {
            metric,
            iou_threshold: self.iou_threshold,
            difficulty,
            mode: self.difficulty_mode,
            min_points: self.min_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub metric: Metric,
    pub iou_threshold: f64,
    pub difficulty: Difficulty,
    pub mode: DifficultyMode,
    pub min_points: usize,
}

impl MatchParams {
    /// Whether a ground truth counts toward recall at this tier.
    pub fn is_eligible(&self, gt: &LabelRecord) -> bool {
        let tier_ok = match self.mode {
            DifficultyMode::Nested => gt.difficulty <= self.difficulty,
            DifficultyMode::Strict => gt.difficulty == self.difficulty,
        };
        tier_ok && gt.num_points.is_none_or(|n| n >= self.min_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    /// Overlaps only an ignored ground truth; not scored.
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    /// Outcome per detection, in input order.
    pub outcomes: Vec<Outcome>,
    /// Per ground truth: matched by some detection.
    pub gt_matched: Vec<bool>,
    pub eligible_gt: usize,
    pub ignored_gt: usize,
}

/// Greedy matching for one frame and one class (callers pre-filter by class).
///
/// Detections are visited by descending score (input order breaks ties).
/// Each takes the unmatched eligible ground truth with the highest IoU at or
/// above the threshold, lowest index on ties. A detection that finds none but
/// overlaps an ignored ground truth at the threshold is ignored; otherwise it
/// is a false positive.
pub fn match_frame(gts: &[LabelRecord], dets: &[Detection], p: &MatchParams) -> FrameMatch {
    let eligible: Vec<bool> = gts.iter().map(|g| p.is_eligible(g)).collect();
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut gt_matched = vec![false; gts.len()];
    let mut outcomes = vec![Outcome::FalsePositive; dets.len()];
    for &d in &order {
        let mut best: Option<(usize, f64)> = None;
        let mut hits_ignored = false;
        for (g, gt) in gts.iter().enumerate() {
            let iou = p.metric.iou(&dets[d].bbox, &gt.bbox);
            if iou < p.iou_threshold {
                continue;
            }
            if !eligible[g] {
                hits_ignored = true;
            } else if !gt_matched[g] && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        outcomes[d] = match best {
            Some((g, _)) => {
                gt_matched[g] = true;
                Outcome::TruePositive
            }
            None if hits_ignored => Outcome::Ignored,
            None => Outcome::FalsePositive,
        };
    }
    let eligible_gt = eligible.iter().filter(|&&e| e).count();
    FrameMatch {
        outcomes,
        gt_matched,
        eligible_gt,
        ignored_gt: gts.len() - eligible_gt,
    }
}

/// A scored, non-ignored detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredOutcome {
    pub score: f64,
    pub is_tp: bool,
}

/// One point on the precision/recall curve: all detections scoring at or
/// above some threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
}

/// Precision/recall operating points, one per distinct score, in descending
/// score order. Equal scores are never split.
pub fn operating_points(stream: &[ScoredOutcome]) -> Vec<OperatingPoint> {
    let mut sorted = stream.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut points: Vec<OperatingPoint> = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (i, s) in sorted.iter().enumerate() {
        if s.is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = sorted.get(i + 1).is_none_or(|n| n.score != s.score);
        if last_of_group {
            points.push(OperatingPoint {
                threshold: s.score,
                tp,
                fp,
            });
        }
    }
    points
}

/// Interpolated average precision in percent over recall positions
/// `1/N, 2/N, ..., 1`. Interpolated precision at recall `r` is the best
/// precision at any operating point with recall `>= r` (0 if none).
///
/// With no eligible ground truth the score is 100 when there is also nothing
/// to score (nothing missed, nothing wrong) and 0 otherwise.
pub fn average_precision(stream: &[ScoredOutcome], total_gt: usize, positions: usize) -> f64 {
    if total_gt == 0 {
        return if stream.is_empty() { 100.0 } else { 0.0 };
    }
    let points = operating_points(stream);
    // Recall is non-decreasing along `points`; a suffix max gives the
    // interpolated precision.
    let mut best_from = vec![0.0f64; points.len() + 1];
    for i in (0..points.len()).rev() {
        let p = &points[i];
        let precision = p.tp as f64 / (p.tp + p.fp) as f64;
        best_from[i] = best_from[i + 1].max(precision);
    }
    let mut sum = 0.0;
    let mut idx = 0;
    for k in 1..=positions {
        while idx < points.len() && points[idx].tp * positions < k * total_gt {
            idx += 1;
        }
        sum += best_from[idx];
    }
    sum * (100.0 / positions as f64)
}

/// R40 average precision in percent.
pub fn ap_r40(stream: &[ScoredOutcome], total_gt: usize) -> f64 {
    average_precision(stream, total_gt, 40)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub class_name: String,
    pub metric: Metric,
    pub difficulty: Difficulty,
    pub ap: f64,
    pub gt_used: usize,
    pub gt_ignored: usize,
    /// Scored (non-ignored) detections.
    pub detections: usize,
    pub ignored_detections: usize,
    /// Counts at the operating point with the best F1 score.
    pub tp: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub recall_positions: usize,
    pub difficulty_mode: DifficultyMode,
    pub frames: usize,
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    /// Mean AP over classes for one cell.
    pub fn map(&self, metric: Metric, difficulty: Difficulty) -> Option<f64> {
        let aps: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.metric == metric && e.difficulty == difficulty)
            .map(|e| e.ap)
            .collect();
        (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
    }

    /// `{metric: {difficulty: AP}}`, averaged over classes.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut out = serde_json::Map::new();
        for metric in Metric::ALL {
            let mut cells = serde_json::Map::new();
            for d in Difficulty::ALL {
                if let Some(ap) = self.map(metric, d) {
                    cells.insert(d.name().to_string(), serde_json::json!(ap));
                }
            }
            if !cells.is_empty() {
                out.insert(metric.label().to_string(), serde_json::Value::Object(cells));
            }
        }
        serde_json::Value::Object(out)
    }

    /// Fixed-width table: one row per class, Easy/Mod./Hard under each metric.
    pub fn render_table(&self) -> String {
        let metrics: Vec<Metric> = Metric::ALL
            .into_iter()
            .filter(|m| self.entries.iter().any(|e| e.metric == *m))
            .collect();
        let mut classes: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !classes.contains(&e.class_name.as_str()) {
                classes.push(&e.class_name);
            }
        }
        let mut s = String::new();
        let _ = write!(s, "{:<14}", "Class");
        for m in &metrics {
            let _ = write!(
                s,
                "| {:^22} ",
                format!("{} at {} IoU", m.label(), self.iou_threshold)
            );
        }
        s.push('\n');
        let _ = write!(s, "{:<14}", "");
        for _ in &metrics {
            let _ = write!(s, "| {:>6} {:>6} {:>6}   ", "Easy", "Mod.", "Hard");
        }
        s.push('\n');
        for class in classes {
            let _ = write!(s, "{class:<14}");
            for m in &metrics {
                s.push_str("| ");
                for d in Difficulty::ALL {
                    match self
                        .entries
                        .iter()
                        .find(|e| e.class_name == class && e.metric == *m && e.difficulty == d)
                    {
                        Some(e) => {
                            let _ = write!(s, "{:>6.2} ", e.ap);
                        }
                        None => {
                            let _ = write!(s, "{:>6} ", "-");
                        }
                    }
                }
                s.push_str("  ");
            }
            s.push('\n');
        }
        s
    }
}

fn best_f1(points: &[OperatingPoint], total_gt: usize) -> (usize, usize) {
    let mut best = (0.0, 0, 0);
    for p in points {
        // F1 = 2TP / (2TP + FP + FN)
        let f1 = 2.0 * p.tp as f64 / (p.tp + p.fp + total_gt).max(1) as f64;
        if f1 > best.0 {
            best = (f1, p.tp, p.fp);
        }
    }
    (best.1, best.2)
}

/// Scores in-memory ground truth and detections keyed by frame id.
pub fn evaluate_frames(
    gts: &BTreeMap<u64, Vec<LabelRecord>>,
    dets: &BTreeMap<u64, Vec<Detection>>,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if let Some(id) = dets.keys().find(|id| !gts.contains_key(id)) {
        return Err(Error::invalid(format!(
            "frame {id} has detections but no ground truth"
        )));
    }
    let empty = Vec::new();
    let mut entries = Vec::new();
    for class in &cfg.classes {
        let per_frame: Vec<(Vec<LabelRecord>, Vec<Detection>)> = gts
            .iter()
            .map(|(id, g)| {
                let g: Vec<LabelRecord> = g
                    .iter()
                    .filter(|l| &l.class_name == class)
                    .cloned()
                    .collect();
                let d: Vec<Detection> = dets
                    .get(id)
                    .unwrap_or(&empty)
                    .iter()
                    .filter(|d| &d.class_name == class)
                    .cloned()
                    .collect();
                (g, d)
            })
            .collect();
        for &metric in &cfg.metrics {
            for &difficulty in &cfg.difficulties {
                let params = cfg.params(metric, difficulty);
                let matches: Vec<FrameMatch> = per_frame
                    .par_iter()
                    .map(|(g, d)| match_frame(g, d, &params))
                    .collect();
                let mut stream = Vec::new();
                let (mut gt_used, mut gt_ignored, mut ignored_dets) = (0, 0, 0);
                for ((_, d), m) in per_frame.iter().zip(&matches) {
                    gt_used += m.eligible_gt;
                    gt_ignored += m.ignored_gt;
                    for (det, o) in d.iter().zip(&m.outcomes) {
                        match o {
                            Outcome::Ignored => ignored_dets += 1,
                            o => stream.push(ScoredOutcome {
                                score: det.score,
                                is_tp: *o == Outcome::TruePositive,
                            }),
                        }
                    }
                }
                let ap = average_precision(&stream, gt_used, cfg.recall_positions);
                if gt_used == 0 {
                    warn!(
                        "{class} {} {}: no eligible ground truth, AP set to {ap}",
                        metric.label(),
                        difficulty.name()
                    );
                }
                let (tp, fp) = best_f1(&operating_points(&stream), gt_used);
                entries.push(EvalEntry {
                    class_name: class.clone(),
                    metric,
                    difficulty,
                    ap,
                    gt_used,
                    gt_ignored,
                    detections: stream.len(),
                    ignored_detections: ignored_dets,
                    tp,
                    fp,
                });
            }
        }
    }
    Ok(EvalReport {
        iou_threshold: cfg.iou_threshold,
        recall_positions: cfg.recall_positions,
        difficulty_mode: cfg.difficulty_mode,
        frames: gts.len(),
        entries,
    })
}

/// Scores `det_dir` against `gt_dir`. Both hold `{frame_id:06}.txt` files;
/// ground-truth frames without a detection file have no detections.
pub fn evaluate(gt_dir: &Path, det_dir: &Path, cfg: &EvalConfig) -> Result<EvalReport> {
    let gt_ids = list_frame_ids(gt_dir, "txt")?;
    let det_ids = list_frame_ids(det_dir, "txt")?;
    if let Some(id) = det_ids.iter().find(|id| gt_ids.binary_search(id).is_err()) {
        return Err(Error::invalid(format!(
            "frame {id} is present in {} but absent from {}",
            det_dir.display(),
            gt_dir.display()
        )));
    }
    let gts = gt_ids
        .iter()
        .map(|&id| Ok((id, read_label_file(label_path(gt_dir, id))?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let dets = det_ids
        .iter()
        .map(|&id| Ok((id, read_detection_file(label_path(det_dir, id))?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    evaluate_frames(&gts, &dets, cfg)
}

/// Ground truth as perfect detections with the given score.
pub fn labels_as_detections(labels: &[LabelRecord], score: f64) -> Vec<Detection> {
    labels
        .iter()
        .map(|l| Detection {
            bbox: l.bbox,
            class_name: l.class_name.clone(),
            score,
        })
        .collect()
}
