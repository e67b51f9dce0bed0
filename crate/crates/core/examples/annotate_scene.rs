//! Simulates one sensor-in-pit frame and annotates it: labels, difficulty,
//! per-point classes and object crops.
//!
//! cargo run --example annotate_scene

use mine3d::annotate::{annotate_frame, height_variation, AnnotateConfig};
use mine3d::frames::ClassRegistry;
use mine3d::simgen::{generate_scene, scan, LidarConfig, Scenario, SceneConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mine3d::Result<()> {
    let cfg = SceneConfig {
        scenario: Scenario::SensorInPit,
        seed: 3,
        ..SceneConfig::default()
    };
    let scene = generate_scene(&cfg, 1)?.remove(0);
    let cloud = scan(
        &scene.frame,
        &scene.terrain,
        &LidarConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .cloud;

    let ann = annotate_frame(
        &scene.frame,
        &cloud,
        &AnnotateConfig::default(),
        &ClassRegistry::default(),
    )?;
    println!("{} points, {} labels", cloud.len(), ann.labels.len());
    for (name, l) in ann.label_objects.iter().zip(&ann.labels) {
        println!(
            "  {name}: center {:.2?} yaw {:+.3} points {:?} height variation {:.2} m -> {:?}",
            l.bbox.center().coords.as_slice(),
            l.bbox.yaw(),
            l.num_points,
            height_variation(&l.bbox),
            l.difficulty
        );
    }
    let foreground = ann.per_point_class.iter().filter(|&&c| c != 0).count();
    println!(
        "foreground points {foreground}, filtered objects {:?}",
        ann.filtered
    );
    Ok(())
}
