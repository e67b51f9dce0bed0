//! Writes a simulated dataset per scenario and reports its difficulty mix.
//!
//! cargo run --release --example generate_dataset [OUT_DIR]

use mine3d::annotate::AnnotateConfig;
use mine3d::frames::CloudFormat;
use mine3d::simgen::{generate_dataset, LidarConfig, Scenario, SceneConfig};

fn main() -> mine3d::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("mine3d-example"));
    for scenario in Scenario::ALL {
        let cfg = SceneConfig {
            scenario,
            seed: 1,
            ..SceneConfig::default()
        };
        let dir = out.join(scenario.name());
        let s = generate_dataset(
            &cfg,
            &LidarConfig::default(),
            5,
            &dir,
            &AnnotateConfig::default(),
            CloudFormat::Ply,
        )?;
        println!(
            "{:<16} {} frames, {} points, {} truth labels, easy/moderate/hard {:?} -> {}",
            scenario.name(),
            s.frames,
            s.points,
            s.truth_labels,
            s.difficulty_histogram,
            dir.display()
        );
    }
    Ok(())
}
