mod common;

use std::path::Path;
use std::process::{Command, Output};

fn mine3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mine3d"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = mine3d(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_annotate_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("bench");
    let gen = ok(&[
        "--json",
        "--seed",
        "12",
        "gen-scene",
        "--frames",
        "4",
        "--out",
        s(&d),
        "--scenario",
        "sensor-on-bench",
    ]);
    let summary: serde_json::Value = serde_json::from_str(&gen).unwrap();
    assert_eq!(summary["frames"], 4);
    assert_eq!(summary["difficulty_histogram"][0], 0);

    ok(&["annotate", s(&d)]);
    let report = d.join("report.json");
    let out = ok(&[
        "--json",
        "evaluate",
        "--gt",
        s(&d.join("labels")),
        "--det",
        s(&d.join("truth-as-dets")),
        "--report",
        s(&report),
    ]);
    let maps: serde_json::Value = serde_json::from_str(&out).unwrap();
    for metric in ["BEV", "3D"] {
        for diff in ["easy", "moderate", "hard"] {
            assert_eq!(maps[metric][diff], 100.0, "{metric} {diff}");
        }
    }
    let full: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(full["entries"].as_array().unwrap().len(), 6);

    let table = ok(&[
        "evaluate",
        "--gt",
        s(&d.join("labels")),
        "--det",
        s(&d.join("truth-as-dets")),
    ]);
    assert!(
        table.contains("BEV at 0.7 IoU") && table.contains("3D at 0.7 IoU"),
        "{table}"
    );
}

#[test]
fn augment_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    ok(&[
        "--seed",
        "3",
        "gen-scene",
        "--frames",
        "3",
        "--out",
        s(&d),
        "--format",
        "bin",
    ]);
    ok(&["annotate", s(&d)]);
    let spec = tmp.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"seed": 1, "steps": [{"type": "random_flip_x", "probability": 0.5},
                                 {"type": "random_altitude_shift", "min": -5, "max": 5}]}"#,
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["augment", "--spec", s(&spec), "--in", s(&d), "--out", s(&a)]);
    ok(&[
        "--jobs",
        "1",
        "augment",
        "--spec",
        s(&spec),
        "--in",
        s(&d),
        "--out",
        s(&b),
    ]);
    assert_eq!(common::tree(&a), common::tree(&b));
    let c = tmp.path().join("c");
    ok(&[
        "--seed",
        "2",
        "augment",
        "--spec",
        s(&spec),
        "--in",
        s(&d),
        "--out",
        s(&c),
    ]);
    assert_ne!(common::tree(&a), common::tree(&c));
}

#[test]
fn mismatched_frames_name_the_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let (g, d) = (tmp.path().join("g"), tmp.path().join("d"));
    std::fs::create_dir_all(&g).unwrap();
    std::fs::create_dir_all(&d).unwrap();
    std::fs::write(g.join("000000.txt"), "").unwrap();
    std::fs::write(d.join("000000.txt"), "").unwrap();
    std::fs::write(d.join("000017.txt"), "").unwrap();
    let o = mine3d(&["evaluate", "--gt", s(&g), "--det", s(&d)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame 17"));
}

#[test]
fn exit_codes() {
    let o = mine3d(&["gen-scene", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = mine3d(&["annotate", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "steps": [{"type": "spin"}]}"#).unwrap();
    let o = mine3d(&[
        "augment",
        "--spec",
        s(&bad),
        "--in",
        s(tmp.path()),
        "--out",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(1));

    assert!(mine3d(&["--help"]).status.success());
    for sub in ["gen-scene", "annotate", "augment", "evaluate"] {
        let o = mine3d(&[sub, "--help"]);
        assert!(o.status.success() && !o.stdout.is_empty(), "{sub}");
    }
}
