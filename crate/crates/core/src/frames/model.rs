use std::collections::BTreeSet;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{Box3D, Pose, Rgb};
use crate::{Error, Result};

/// Difficulty tier: 0 easy, 1 moderate, 2 hard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Difficulty {
    Easy = 0,
    Moderate = 1,
    Hard = 2,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            0 => Some(Difficulty::Easy),
            1 => Some(Difficulty::Moderate),
            2 => Some(Difficulty::Hard),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
        }
    }
}

impl TryFrom<u8> for Difficulty {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Difficulty::from_level(v).ok_or_else(|| format!("difficulty {v} is not 0, 1 or 2"))
    }
}

impl From<Difficulty> for u8 {
    fn from(d: Difficulty) -> u8 {
        d.level()
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.level())
    }
}

/// Names end up in file names and whitespace-separated label lines.
pub(crate) fn check_token(kind: &str, s: &str) -> Result<()> {
    if s.is_empty()
        || s.chars()
            .any(|c| c.is_whitespace() || c == '/' || c == '\\')
    {
        return Err(Error::invalid(format!(
            "{kind} {s:?} must be non-empty without whitespace or path separators"
        )));
    }
    Ok(())
}

/// One simulated object as recorded in the pose log. The pose position is
/// the object's base footprint, not its geometric center.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub name: String,
    pub class_name: String,
    pub size: Vector3<f64>,
    pub pose: Pose,
}

/// One capture: sensor pose in the world frame plus the objects in view.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub sensor_pose: Pose,
    pub objects: Vec<ObjectInstance>,
}

impl FrameRecord {
    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for o in &self.objects {
            check_token("object name", &o.name)?;
            check_token("class name", &o.class_name)?;
            if !o.size.iter().all(|s| s.is_finite() && *s > 0.0) {
                return Err(Error::invalid(format!(
                    "frame {}: object {} has non-positive size",
                    self.frame_id, o.name
                )));
            }
            if !names.insert(o.name.as_str()) {
                return Err(Error::invalid(format!(
                    "frame {}: duplicate object name {}",
                    self.frame_id, o.name
                )));
            }
        }
        Ok(())
    }
}

/// One annotated object in the sensor frame.
///
/// `num_points` is known for freshly annotated objects; label files do not
/// store it, so records read back from disk carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub bbox: Box3D,
    pub class_name: String,
    pub difficulty: Difficulty,
    pub num_points: Option<usize>,
}

/// Predicted box with a confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: Box3D,
    pub class_name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    pub id: u32,
    pub color: Rgb,
}

/// Ordered class list. Id 0 is reserved for background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegistryFile", into = "RegistryFile")]
pub struct ClassRegistry {
    classes: Vec<ClassEntry>,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    classes: Vec<ClassEntry>,
}

impl TryFrom<RegistryFile> for ClassRegistry {
    type Error = Error;
    fn try_from(f: RegistryFile) -> Result<Self> {
        ClassRegistry::new(f.classes)
    }
}

impl From<ClassRegistry> for RegistryFile {
    fn from(r: ClassRegistry) -> Self {
        RegistryFile { classes: r.classes }
    }
}

pub const BACKGROUND_CLASS_ID: u32 = 0;
pub const BACKGROUND_COLOR: Rgb = [0, 0, 0];

impl ClassRegistry {
    pub fn new(classes: Vec<ClassEntry>) -> Result<Self> {
        let mut names = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for c in &classes {
            check_token("class name", &c.name)?;
            if c.id == BACKGROUND_CLASS_ID {
                return Err(Error::invalid(format!(
                    "class {} uses id 0, which is reserved for background",
                    c.name
                )));
            }
            if !names.insert(c.name.clone()) || !ids.insert(c.id) {
                return Err(Error::invalid(format!(
                    "class registry has a duplicate name or id at {} ({})",
                    c.name, c.id
                )));
            }
        }
        Ok(ClassRegistry { classes })
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn by_name(&self, name: &str) -> Option<&ClassEntry> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Color for a class id; background maps to black.
    pub fn color(&self, id: u32) -> Option<Rgb> {
        if id == BACKGROUND_CLASS_ID {
            return Some(BACKGROUND_COLOR);
        }
        self.classes.iter().find(|c| c.id == id).map(|c| c.color)
    }
}

impl Default for ClassRegistry {
    fn default() -> Self {
        ClassRegistry {
            classes: vec![ClassEntry {
                name: "Excavator".into(),
                id: 1,
                color: [255, 0, 0],
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_rules() {
        let e = |name: &str, id| ClassEntry {
            name: name.into(),
            id,
            color: [1, 2, 3],
        };
        assert!(ClassRegistry::new(vec![e("A", 0)]).is_err());
        assert!(ClassRegistry::new(vec![e("A", 1), e("A", 2)]).is_err());
        assert!(ClassRegistry::new(vec![e("A", 1), e("B", 1)]).is_err());
        assert!(ClassRegistry::new(vec![e("has space", 1)]).is_err());
        let r = ClassRegistry::new(vec![e("A", 1), e("B", 7)]).unwrap();
        assert_eq!(r.color(7), Some([1, 2, 3]));
        assert_eq!(r.color(0), Some([0, 0, 0]));
        assert_eq!(r.color(3), None);

        let json = serde_json::to_string(&r).unwrap();
        let back: ClassRegistry = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<ClassRegistry>(
            r#"{"classes":[{"name":"X","id":0,"color":[0,0,0]}]}"#
        )
        .is_err());
    }

    #[test]
    fn default_registry() {
        let r = ClassRegistry::default();
        assert_eq!(r.by_name("Excavator").unwrap().id, 1);
        assert_eq!(r.color(1), Some([255, 0, 0]));
    }
}
