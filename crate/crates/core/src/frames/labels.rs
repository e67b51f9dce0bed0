//! Label files (`x y z dx dy dz yaw class difficulty`) and detection files
//! (the same line plus a trailing score).
//!
//! Floats are printed in shortest round-trip form, so reading a file back
//! yields bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use super::model::check_token;
use super::{Detection, Difficulty, LabelRecord};
use crate::geom::Box3D;
use crate::{Error, Result};

pub const LABEL_TOKENS: usize = 9;
pub const DETECTION_TOKENS: usize = 10;

fn push_box(line: &mut String, b: &Box3D) {
    let (c, s) = (b.center(), b.size());
    let _ = write!(
        line,
        "{} {} {} {} {} {} {}",
        c.x,
        c.y,
        c.z,
        s.x,
        s.y,
        s.z,
        b.yaw()
    );
}

pub fn format_label_line(label: &LabelRecord) -> Result<String> {
    check_token("class name", &label.class_name)?;
    let mut line = String::new();
    push_box(&mut line, &label.bbox);
    let _ = write!(line, " {} {}", label.class_name, label.difficulty);
    Ok(line)
}

pub fn format_detection_line(det: &Detection) -> Result<String> {
    check_token("class name", &det.class_name)?;
    if !det.score.is_finite() {
        return Err(Error::invalid("detection score must be finite"));
    }
    let mut line = String::new();
    push_box(&mut line, &det.bbox);
    // Detections carry no difficulty; the column is kept so the first nine
    // tokens parse as a label line.
    let _ = write!(line, " {} 0 {}", det.class_name, det.score);
    Ok(line)
}

fn write_lines(path: &Path, lines: Vec<String>) -> Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_label_file(path: impl AsRef<Path>, labels: &[LabelRecord]) -> Result<()> {
    let lines = labels
        .iter()
        .map(format_label_line)
        .collect::<Result<_>>()?;
    write_lines(path.as_ref(), lines)
}

pub fn write_detection_file(path: impl AsRef<Path>, dets: &[Detection]) -> Result<()> {
    let lines = dets
        .iter()
        .map(format_detection_line)
        .collect::<Result<_>>()?;
    write_lines(path.as_ref(), lines)
}

struct Line<'a> {
    path: &'a Path,
    number: usize,
    tokens: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.number,
            column: 0,
            msg: msg.into(),
        }
    }

    fn float(&self, i: usize) -> Result<f64> {
        let v: f64 = self.tokens[i].parse().map_err(|_| {
            self.err(format!(
                "token {} ({:?}) is not a number",
                i + 1,
                self.tokens[i]
            ))
        })?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(format!("token {} is not finite", i + 1)))
        }
    }

    fn bbox(&self) -> Result<Box3D> {
        let f = |i| self.float(i);
        Box3D::new(
            Point3::new(f(0)?, f(1)?, f(2)?),
            Vector3::new(f(3)?, f(4)?, f(5)?),
            f(6)?,
        )
        .map_err(|e| self.err(e.to_string()))
    }

    fn difficulty(&self) -> Result<Difficulty> {
        self.tokens[8]
            .parse::<u8>()
            .ok()
            .and_then(Difficulty::from_level)
            .ok_or_else(|| self.err(format!("difficulty {:?} is not 0, 1 or 2", self.tokens[8])))
    }
}

fn lines<'a>(path: &'a Path, text: &'a str, expected: usize) -> Result<Vec<Line<'a>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = Line {
                path,
                number: i + 1,
                tokens: l.split_whitespace().collect(),
            };
            if line.tokens.len() != expected {
                return Err(line.err(format!(
                    "expected {expected} tokens, found {}",
                    line.tokens.len()
                )));
            }
            Ok(line)
        })
        .collect()
}

pub fn parse_label_file(text: &str, path: &Path) -> Result<Vec<LabelRecord>> {
    lines(path, text, LABEL_TOKENS)?
        .iter()
        .map(|l| {
            Ok(LabelRecord {
                bbox: l.bbox()?,
                class_name: l.tokens[7].to_string(),
                difficulty: l.difficulty()?,
                num_points: None,
            })
        })
        .collect()
}

pub fn parse_detection_file(text: &str, path: &Path) -> Result<Vec<Detection>> {
    lines(path, text, DETECTION_TOKENS)?
        .iter()
        .map(|l| {
            l.difficulty()?;
            Ok(Detection {
                bbox: l.bbox()?,
                class_name: l.tokens[7].to_string(),
                score: l.float(9)?,
            })
        })
        .collect()
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_label_file(&text, path)
}

pub fn read_detection_file(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detection_file(&text, path)
}
