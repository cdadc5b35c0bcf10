use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use roomlayout::io::{load_depth_raster, load_mask, load_selection, read_json};
use roomlayout::pipeline::SceneEntry;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomlayout"))
        .args(args)
        .output()
        .expect("spawn roomlayout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_select_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    let out = run(&["--seed", "9", "synth", "--out", p(&ds), "--count", "11", "--size", "96"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let scenes: Vec<SceneEntry> = read_json(&ds.join("scenes.json")).unwrap();
    assert_eq!(scenes.len(), 11);
    let sel = dir.path().join("sel");
    for s in &scenes {
        let o = run(&[
            "select",
            "--bundle",
            p(&ds.join("pred").join(&s.image_id)),
            "--out",
            p(&sel.join(&s.image_id)),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (report, mask) = load_selection(&sel.join(&s.image_id)).unwrap();
        assert_eq!(report.room_type, s.room_type, "{}", s.image_id);
        assert_eq!(mask.width(), 96);
    }

    let report_path = dir.path().join("eval.json");
    let o = run(&[
        "eval",
        "--gt",
        p(&ds.join("gt")),
        "--pred",
        p(&sel),
        "--out",
        p(&report_path),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = read_json(&report_path).unwrap();
    assert_eq!(report["image_count"], 11);
    assert!(report["pixel_error_pct"].as_f64().unwrap() < 1.0);
}

#[test]
fn depth_and_rasterize_from_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert!(run(&["synth", "--out", p(&ds), "--count", "1", "--size", "128"])
        .status
        .success());
    let record = ds.join("gt/scene_00000.json");

    let mask_path = dir.path().join("mask.png");
    let o = run(&[
        "rasterize",
        "--layout",
        p(&record),
        "--out",
        p(&mask_path),
        "--width",
        "64",
        "--height",
        "64",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_mask(&mask_path).unwrap().size().area(), 64 * 64);

    let prefix = dir.path().join("d");
    let o = run(&["depth", "--layout", p(&record), "--out", p(&prefix)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let depth = load_depth_raster(&dir.path().join("d.bin")).unwrap();
    assert_eq!((depth.size.width, depth.size.height), (128, 128));
    assert!(depth.depth.iter().all(|d| d.is_finite() && *d > 0.0));
    assert!(dir.path().join("d.png").is_file());
    assert!(dir.path().join("d_fit.json").is_file());
}

#[test]
fn heatmap_commands_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    assert!(run(&["synth", "--out", p(&ds), "--count", "1", "--size", "160"])
        .status
        .success());
    let record = ds.join("gt/scene_00000.json");
    let hm = dir.path().join("hm");
    assert!(run(&["encode-heatmaps", "--layout", p(&record), "--out", p(&hm)])
        .status
        .success());
    let o = run(&[
        "decode-heatmaps",
        "--heatmaps",
        p(&hm),
        "--width",
        "160",
        "--height",
        "160",
    ]);
    assert!(o.status.success());
    let decoded: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let original: serde_json::Value = read_json(&record).unwrap();
    let (a, b) = (
        decoded["keypoints"].as_array().unwrap(),
        original["keypoints"].as_array().unwrap(),
    );
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        let dx = x["x"].as_f64().unwrap() - y["x"].as_f64().unwrap();
        let dy = x["y"].as_f64().unwrap() - y["y"].as_f64().unwrap();
        // exits on the right or bottom edge sit one cell past the last sample
        assert!(dx.hypot(dy) < 2.5, "{x} vs {y}");
    }
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    for args in [
        vec!["select", "--bundle", p(&missing), "--out", p(&missing)],
        vec!["--lambda", "-1", "score", "--layout-mask", "a", "--segmentation", "b"],
        vec![
            "--iou-threshold",
            "1.5",
            "score",
            "--layout-mask",
            "a",
            "--segmentation",
            "b",
        ],
        vec!["frobnicate"],
        vec!["rasterize", "--layout", "x.json", "--out", "y.png", "--width", "10"],
    ] {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"image_id":"x","width":10,"height":10,"room_type":11,"keypoints":[]}"#,
    )
    .unwrap();
    let o = run(&["rasterize", "--layout", p(&bad), "--out", p(&dir.path().join("m.png"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn broken_layouts_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("c.json");
    // type 6 junctions crossed over
    fs::write(
        &rec,
        r#"{"image_id":"x","width":100,"height":100,"room_type":6,
            "keypoints":[{"id":1,"x":0,"y":80},{"id":2,"x":100,"y":10},{"id":3,"x":0,"y":20},{"id":4,"x":100,"y":90}]}"#,
    )
    .unwrap();
    let o = run(&["rasterize", "--layout", p(&rec), "--out", p(&dir.path().join("m.png"))]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
