//! Command-line front end: `gen-scene`, `annotate`, `augment`, `evaluate`.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
//! Diagnostics go to stderr; `--json` puts a machine-readable summary on
//! stdout. Config files are JSON with the field names of the matching config
//! type; command-line flags override file values.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_dataset, AnnotateConfig};
use crate::augment::{augment_dataset, AugmentSpec};
use crate::eval::{evaluate, DifficultyMode, EvalConfig};
use crate::frames::{ClassRegistry, CloudFormat};
use crate::simgen::{generate_dataset, LidarConfig, Scenario, SceneConfig};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mine3d",
    version,
    about = "Mine-scene 3D detection dataset toolkit"
)]
struct Cli {
    /// Print a JSON summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads for frame-parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides the seed from the config or spec file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file for the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with exact ground truth.
    GenScene(GenSceneArgs),
    /// Annotate a dataset: labels, semantic CSVs and per-object crops.
    Annotate(AnnotateArgs),
    /// Apply an augmentation spec to an annotated dataset.
    Augment(AugmentArgs),
    /// Score detections against ground-truth labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct GenSceneArgs {
    /// Terrain layout around the sensor.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Number of frames to generate.
    #[arg(long)]
    frames: usize,
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
    /// Objects per frame.
    #[arg(long)]
    objects: Option<usize>,
    /// Bench height above the pit floor in meters.
    #[arg(long, value_name = "M")]
    bench_height: Option<f64>,
    /// Disable range noise.
    #[arg(long)]
    no_noise: bool,
    /// Point threshold used when deriving truth labels.
    #[arg(long)]
    min_points: Option<usize>,
    /// Cloud file format.
    #[arg(long, value_parser = parse_format)]
    format: Option<CloudFormat>,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    /// Dataset root holding poses.json and frames/.
    dataset: PathBuf,
    /// Output root (default: the dataset root).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Objects with fewer points are not labelled.
    #[arg(long)]
    min_points: Option<usize>,
    /// Semantic CSVs hold object points only.
    #[arg(long)]
    foreground_only: bool,
    /// Class registry JSON (`{"classes": [{"name", "id", "color"}]}`).
    #[arg(long, value_name = "FILE")]
    classes: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Augmentation spec JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Annotated dataset root.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Directory of ground-truth label files.
    #[arg(long)]
    gt: PathBuf,
    /// Directory of detection files.
    #[arg(long)]
    det: PathBuf,
    /// Score each tier on its own ground truth only.
    #[arg(long)]
    strict_difficulty: bool,
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// IoU threshold for a true positive.
    #[arg(long)]
    iou: Option<f64>,
    /// Ground truth with fewer points is ignored.
    #[arg(long)]
    min_points: Option<usize>,
}

fn parse_format(s: &str) -> std::result::Result<CloudFormat, String> {
    match s {
        "ply" => Ok(CloudFormat::Ply),
        "bin" | "xyz-bin" => Ok(CloudFormat::XyzBin),
        _ => Err(format!("unknown format {s:?}; expected ply or bin")),
    }
}

impl clap::ValueEnum for Scenario {
    fn value_variants<'a>() -> &'a [Self] {
        &Scenario::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// `gen-scene` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSceneConfig {
    pub scene: SceneConfig,
    pub lidar: LidarConfig,
    /// Rules used to derive truth labels.
    pub annotate: AnnotateConfig,
    pub format: CloudFormat,
}

impl Default for GenSceneConfig {
    fn default() -> Self {
        GenSceneConfig {
            scene: SceneConfig::default(),
            lidar: LidarConfig::default(),
            annotate: AnnotateConfig::default(),
            format: CloudFormat::Ply,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn config_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{what} directory not found"),
            ),
        ))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("summary serializes")
}

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the CLI, writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();

    let result = match cli.jobs {
        Some(0) => Err(Error::invalid("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {n} worker threads: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        None => dispatch(&cli),
    };
    match result {
        Ok(text) => {
            let _ = writeln!(out, "{text}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::GenScene(a) => {
            let mut cfg: GenSceneConfig = config_or_default(config)?;
            if let Some(s) = a.scenario {
                cfg.scene.scenario = s;
            }
            if let Some(n) = a.objects {
                cfg.scene.n_objects = n;
            }
            if let Some(b) = a.bench_height {
                cfg.scene.bench_height_m = b;
            }
            if let Some(s) = cli.seed {
                cfg.scene.seed = s;
            }
            if a.no_noise {
                cfg.lidar.noise = false;
            }
            if let Some(m) = a.min_points {
                cfg.annotate.min_points = m;
            }
            if let Some(f) = a.format {
                cfg.format = f;
            }
            let s = generate_dataset(
                &cfg.scene,
                &cfg.lidar,
                a.frames,
                &a.out,
                &cfg.annotate,
                cfg.format,
            )?;
            Ok(if cli.json {
                to_json(&s)
            } else {
                format!(
                    "generated {} frames ({} points, {} objects, {} truth labels; easy/moderate/hard {:?}) in {}",
                    s.frames,
                    s.points,
                    s.objects,
                    s.truth_labels,
                    s.difficulty_histogram,
                    a.out.display()
                )
            })
        }
        Command::Annotate(a) => {
            require_dir(&a.dataset, "dataset")?;
            let mut cfg: AnnotateConfig = config_or_default(config)?;
            if let Some(m) = a.min_points {
                cfg.min_points = m;
            }
            if a.foreground_only {
                cfg.emit_background = false;
            }
            let registry: ClassRegistry = config_or_default(a.classes.as_deref())?;
            let s = annotate_dataset(&a.dataset, a.out.as_deref(), &cfg, &registry)?;
            Ok(if cli.json {
                to_json(&s)
            } else {
                format!(
                    "annotated {} frames: {} labels, {} objects below min_points, {} outside the detection range",
                    s.frames, s.labels, s.filtered, s.out_of_range
                )
            })
        }
        Command::Augment(a) => {
            require_dir(&a.input, "input")?;
            let mut spec: AugmentSpec = read_json(&a.spec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let s = augment_dataset(&a.input, &a.out, &spec)?;
            Ok(if cli.json {
                to_json(&s)
            } else {
                format!(
                    "augmented {} frames ({} labels) into {}",
                    s.frames,
                    s.labels,
                    a.out.display()
                )
            })
        }
        Command::Evaluate(a) => {
            require_dir(&a.gt, "ground-truth")?;
            require_dir(&a.det, "detection")?;
            let mut cfg: EvalConfig = config_or_default(config)?;
            if a.strict_difficulty {
                cfg.difficulty_mode = DifficultyMode::Strict;
            }
            if let Some(t) = a.iou {
                cfg.iou_threshold = t;
            }
            if let Some(m) = a.min_points {
                cfg.min_points = m;
            }
            let report = evaluate(&a.gt, &a.det, &cfg)?;
            if let Some(path) = &a.report {
                let mut text = to_json(&report);
                text.push('\n');
                fs::write(path, text).map_err(|e| Error::io(path, e))?;
            }
            Ok(if cli.json {
                to_json(&report.summary_json())
            } else {
                report.render_table().trim_end().to_string()
            })
        }
    }
}
