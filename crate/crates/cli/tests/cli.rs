use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scenediff::change::{
    frame_codes, likelihood_eq1, read_changes, read_localization_top, MapCodes, ReferencePool,
};
use scenediff::projection::ProjectionDictionary;
use scenediff::store::read_feature_store;
use scenediff::vocabulary::Vocabulary;

const WORLD: &str = r#"
seed = 11
route_frames = 150
exclusion = 100
query_count = 3
query_separation = 30
landmarks_per_meter = 3.0
image_width = 320
image_height = 240
focal = 200.0
max_depth = 30.0
descriptor_noise = 0.18
curves = [{ start_frame = 60, arc_degrees = 45.0, radius = 20.0 }]
"#;

const RUN: &str = r#"
map = "world/map"
queries = "world/queries"
tracks = "world/tracks.csv"
models = "models"
output = "out"
exclusion = 100
word_count = 64
vocab_sample = 3000
kmeans_iterations = 15
motion_sample_size = 2000
motion_iterations = 20
motion_words = 300
"#;

fn scenediff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenediff"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = scenediff(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// gen, learn-vocab, learn-motion, index, detect, evaluate in a fresh dir.
fn full_pipeline() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("world.toml"), WORLD).unwrap();
    fs::write(dir.join("run.toml"), RUN).unwrap();
    ok(dir, &["gen", "--config", "world.toml", "--out", "world"]);
    for stage in ["learn-vocab", "learn-motion", "index", "detect"] {
        ok(dir, &[stage, "--config", "run.toml"]);
    }
    ok(
        dir,
        &[
            "evaluate",
            "--config",
            "run.toml",
            "--gt",
            "world/gt_boxes.csv",
        ],
    );
    tmp
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

#[test]
fn pipeline_is_deterministic_across_runs() {
    let a = full_pipeline();
    let b = full_pipeline();
    let files: [PathBuf; 9] = [
        "out/report.csv".into(),
        "out/changes.csv".into(),
        "out/localization.csv".into(),
        "out/run_meta.json".into(),
        "models/vocab.vvf".into(),
        "models/motion.mvf".into(),
        "models/index.bif".into(),
        "world/gt_boxes.csv".into(),
        "world/tracks.csv".into(),
    ];
    for f in &files {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{} is empty", f.display());
        assert!(x == y, "{} differs between runs", f.display());
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("out/run_meta.json")).unwrap())
            .unwrap();
    let c = &meta["config"];
    assert_eq!(
        (c["r"].as_u64(), c["k"].as_u64(), c["tm"].as_f64()),
        (Some(10), Some(10), Some(10.0))
    );
    assert_eq!(c["effective_scorer"], "motion");
    let report = fs::read_to_string(a.path().join("out/report.csv")).unwrap();
    assert!(report.lines().last().unwrap().starts_with("summary,"));
}

#[test]
fn no_motion_detect_is_appearance_only() {
    let tmp = full_pipeline();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "detect",
            "--config",
            "run.toml",
            "--no-motion",
            "--output",
            "plain",
        ],
    );
    ok(
        dir,
        &[
            "detect",
            "--config",
            "run.toml",
            "--scorer",
            "appearance",
            "--output",
            "named",
        ],
    );
    assert_eq!(
        fs::read(dir.join("plain/changes.csv")).unwrap(),
        fs::read(dir.join("named/changes.csv")).unwrap()
    );

    // every likelihood is the minimum Hamming distance over the retrieved frames
    let map = read_feature_store(&dir.join("world/map")).unwrap();
    let queries = read_feature_store(&dir.join("world/queries")).unwrap();
    let vocab = Vocabulary::load(&dir.join("models/vocab.vvf")).unwrap();
    let dict = ProjectionDictionary::new(0, 128, vocab.dim()).unwrap();
    let codes = MapCodes::build(&map, Some(&dict)).unwrap();
    let scores = read_changes(&dir.join("plain/changes.csv")).unwrap();
    let retrieved = fs::read_to_string(dir.join("plain/localization.csv")).unwrap();
    assert!(!scores.is_empty());
    for q in &queries.frames {
        let frames: Vec<u32> = retrieved
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_owned).collect::<Vec<_>>())
            .filter(|c| c[0] == q.frame_id.to_string())
            .map(|c| c[2].parse().unwrap())
            .collect();
        assert_eq!(frames.len(), 10);
        let pool = ReferencePool::from_frames(&codes, frames).unwrap();
        let q_codes = frame_codes(q, Some(&dict)).unwrap();
        let mine: Vec<_> = scores
            .iter()
            .filter(|s| s.query_frame == q.frame_id)
            .collect();
        assert_eq!(mine.len(), q.features.len());
        for s in mine {
            let expected = likelihood_eq1(&q_codes[s.feature_id as usize], &pool).unwrap();
            assert_eq!(s.likelihood, expected);
            assert!(!s.anomaly_motion);
        }
    }
}

#[test]
fn plot_data_and_flag_overrides() {
    let tmp = full_pipeline();
    let dir = tmp.path();
    ok(
        dir,
        &[
            "plot-data",
            "--config",
            "run.toml",
            "--gt",
            "world/gt_boxes.csv",
        ],
    );
    let plot = fs::read_to_string(dir.join("out/plot_data.csv")).unwrap();
    assert!(plot.starts_with("query_frame,localization_error,best_rank\n"));
    let tops = read_localization_top(&dir.join("out/localization.csv")).unwrap();
    assert_eq!(tops.len(), 3);

    ok(
        dir,
        &[
            "localize", "--config", "run.toml", "-R", "3", "--Tm", "7.5", "--output", "loc",
        ],
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("loc/run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["subcommand"], "localize");
    assert_eq!(meta["config"]["r"], 3);
    assert_eq!(meta["config"]["tm"], 7.5);
    assert_eq!(meta["config"]["word_count"], 64);
    let rows = fs::read_to_string(dir.join("loc/localization.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 3);
}

#[test]
fn missing_map_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = scenediff(tmp.path(), &["detect"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "configuration");
}

#[test]
fn empty_score_file_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("changes.csv"), "").unwrap();
    fs::write(dir.join("gt.csv"), "query_frame,x0,y0,x1,y1\n").unwrap();
    let out = scenediff(
        dir,
        &[
            "evaluate",
            "--scores",
            "changes.csv",
            "--gt",
            "gt.csv",
            "--output",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("empty"));

    fs::write(
        dir.join("changes.csv"),
        "query_frame,feature_id,x,y,likelihood,matched_frame,matched_feature,anomaly_motion\n",
    )
    .unwrap();
    let out = scenediff(
        dir,
        &[
            "evaluate",
            "--scores",
            "changes.csv",
            "--gt",
            "gt.csv",
            "--output",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "validation");
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        scenediff(tmp.path(), &["frobnicate"]).status.code(),
        Some(2)
    );
    assert_eq!(
        scenediff(tmp.path(), &["detect", "-R", "many"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        scenediff(tmp.path(), &["detect", "--motion", "--no-motion"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_config_values_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "window = 7\n").unwrap();
    let out = scenediff(tmp.path(), &["index", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "validation");

    let out = scenediff(tmp.path(), &["index", "-R", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "validation");
}
