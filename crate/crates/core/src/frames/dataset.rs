//! Dataset directory layout, semantic CSVs and the per-object crop database.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::cloud_io::{read_point_cloud, write_point_cloud, CloudFormat};
use super::model::{check_token, BACKGROUND_CLASS_ID};
use super::ClassRegistry;
use crate::geom::{PointCloud, Rgb};
use crate::{Error, Result};

pub const POSE_LOG: &str = "poses.json";
pub const FRAMES_DIR: &str = "frames";
pub const LABELS_DIR: &str = "labels";
pub const SEMANTIC_DIR: &str = "semantic";
pub const GT_DATABASE_DIR: &str = "gt_database";
pub const TRUTH_DIR: &str = "truth";
pub const TRUTH_DETS_DIR: &str = "truth-as-dets";

/// Paths inside a dataset root.
#[derive(Debug, Clone)]
pub struct DatasetLayout {
    root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatasetLayout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pose_log(&self) -> PathBuf {
        self.root.join(POSE_LOG)
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn frame_cloud(&self, frame_id: u64, format: CloudFormat) -> PathBuf {
        self.dir(FRAMES_DIR)
            .join(format!("{frame_id:06}.{}", format.extension()))
    }

    /// The frame's cloud file, whichever of `.bin` / `.ply` exists.
    pub fn find_frame_cloud(&self, frame_id: u64) -> Result<(PathBuf, CloudFormat)> {
        for format in [CloudFormat::XyzBin, CloudFormat::Ply] {
            let p = self.frame_cloud(frame_id, format);
            if p.is_file() {
                return Ok((p, format));
            }
        }
        Err(Error::invalid(format!(
            "frame {frame_id}: no point cloud at {}/{frame_id:06}.bin or .ply",
            self.dir(FRAMES_DIR).display()
        )))
    }

    pub fn label(&self, frame_id: u64) -> PathBuf {
        label_path(&self.dir(LABELS_DIR), frame_id)
    }

    pub fn semantic(&self, frame_id: u64) -> PathBuf {
        self.dir(SEMANTIC_DIR).join(format!("{frame_id:06}.csv"))
    }
}

pub fn label_path(dir: &Path, frame_id: u64) -> PathBuf {
    dir.join(format!("{frame_id:06}.txt"))
}

pub fn crop_file_name(frame_id: u64, object_name: &str) -> String {
    format!("Crop_3d_{frame_id:06}_{object_name}.ply")
}

/// Frame ids of `{id}.{ext}` files in `dir`, ascending. Other files are ignored.
pub fn list_frame_ids(dir: &Path, ext: &str) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
        {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Whether background (class 0) points appear in the semantic CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackgroundPolicy {
    #[default]
    Include,
    ForegroundOnly,
}

pub const SEMANTIC_HEADER: &str = "x,y,z,r,g,b,class_id";

pub fn semantic_csv_string(
    pcd: &PointCloud,
    per_point_class: &[u32],
    registry: &ClassRegistry,
    policy: BackgroundPolicy,
) -> Result<String> {
    if per_point_class.len() != pcd.len() {
        return Err(Error::invalid(format!(
            "{} class ids for {} points",
            per_point_class.len(),
            pcd.len()
        )));
    }
    let mut out = String::with_capacity(32 * pcd.len() + 32);
    out.push_str(SEMANTIC_HEADER);
    out.push('\n');
    for (p, &id) in pcd.points().iter().zip(per_point_class) {
        let [r, g, b] = registry
            .color(id)
            .ok_or_else(|| Error::invalid(format!("class id {id} is not in the class registry")))?;
        if id == BACKGROUND_CLASS_ID && policy == BackgroundPolicy::ForegroundOnly {
            continue;
        }
        out.push_str(&format!("{},{},{},{r},{g},{b},{id}\n", p.x, p.y, p.z));
    }
    Ok(out)
}

pub fn write_semantic_csv(
    path: impl AsRef<Path>,
    pcd: &PointCloud,
    per_point_class: &[u32],
    registry: &ClassRegistry,
    policy: BackgroundPolicy,
) -> Result<()> {
    let path = path.as_ref();
    let text = semantic_csv_string(pcd, per_point_class, registry, policy)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One CSV row: position, color, class id.
pub type SemanticRow = (Point3<f64>, Rgb, u32);

pub fn read_semantic_csv(path: impl AsRef<Path>) -> Result<Vec<SemanticRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SEMANTIC_HEADER => {}
        _ => {
            return Err(Error::format(
                path,
                format!("expected header {SEMANTIC_HEADER}"),
            ))
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let err = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 0,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(err("expected 7 fields"));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| err("bad coordinate"));
            let byte = |k: usize| f[k].parse::<u8>().map_err(|_| err("bad color"));
            Ok((
                Point3::new(num(0)?, num(1)?, num(2)?),
                [byte(3)?, byte(4)?, byte(5)?],
                f[6].parse().map_err(|_| err("bad class id"))?,
            ))
        })
        .collect()
}

/// Saves one object's crop as `<root>/gt_database/Crop_3d_<frame>_<name>.ply`.
pub fn write_gt_database(
    root: impl AsRef<Path>,
    frame_id: u64,
    object_name: &str,
    crop: &PointCloud,
) -> Result<PathBuf> {
    check_token("object name", object_name)?;
    let dir = root.as_ref().join(GT_DATABASE_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(crop_file_name(frame_id, object_name));
    write_point_cloud(&path, crop, CloudFormat::Ply)?;
    Ok(path)
}

pub fn read_gt_database(
    root: impl AsRef<Path>,
    frame_id: u64,
    object_name: &str,
) -> Result<PointCloud> {
    let path = root
        .as_ref()
        .join(GT_DATABASE_DIR)
        .join(crop_file_name(frame_id, object_name));
    read_point_cloud(path, CloudFormat::Ply)
}
