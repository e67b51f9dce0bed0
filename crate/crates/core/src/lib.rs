//! Dataset tooling for altitude-aware 3D object detection in open-pit mines.
//!
//! The crate turns recorded pose logs and LiDAR frames into KITTI-style
//! training data ([`annotate`]), applies altitude-aware augmentations
//! ([`augment`]), scores detector output with an R40 average-precision
//! evaluator split by difficulty tier ([`eval`]), and can synthesize
//! bench/pit scenes with exact ground truth ([`simgen`]).
//!
//! All distances are meters, all angles radians, quaternions are `w, x, y, z`.

pub mod annotate;
pub mod augment;
pub mod cli;
pub mod error;
pub mod eval;
pub mod frames;
pub mod geom;
pub mod simgen;

pub use error::{Error, Result};
