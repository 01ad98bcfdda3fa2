use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use scenediff::change::{
    read_changes, read_localization_top, write_changes, write_localization, DetectionContext,
};
use scenediff::config::RunConfig;
use scenediff::evaluation::{plot_data, read_gt_boxes, write_plot_data, write_report};
use scenediff::feature::{DescriptorKind, Frame, ViewSequenceMap};
use scenediff::localization::BolcfIndex;
use scenediff::motion::{read_tracks, MotionVocabulary};
use scenediff::projection::ProjectionDictionary;
use scenediff::store::{read_feature_store, read_frame_file, read_odometry};
use scenediff::synthworld::{generate_world, write_world, WorldConfig};
use scenediff::vocabulary::Vocabulary;
use scenediff::{pipeline, Error};
use serde_json::json;

use crate::args::{Command, EvaluateArgs, GenArgs, LocalizeArgs, PlotArgs, RunArgs};

pub const VOCAB_FILE: &str = "vocab.vvf";
pub const MOTION_FILE: &str = "motion.mvf";
pub const INDEX_FILE: &str = "index.bif";
pub const META_FILE: &str = "run_meta.json";

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(&a),
        Command::LearnVocab(a) => learn_vocab(&a),
        Command::LearnMotion(a) => learn_motion(&a),
        Command::Index(a) => index(&a),
        Command::Localize(a) => localize(&a),
        Command::Detect(a) => detect(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::PlotData(a) => plot(&a),
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    args.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| {
        Error::Configuration(format!("`{key}` is not set (config key or --{key})")).into()
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// `run_meta.json`: the effective configuration and the files written.
/// Contains no timestamps so identical runs produce identical files.
fn write_meta(
    dir: &Path,
    subcommand: &str,
    config: serde_json::Value,
    outputs: &[&str],
) -> Result<()> {
    let meta = json!({
        "tool": "scenediff",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "config": config,
        "outputs": outputs,
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    let path = dir.join(META_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn run_meta(dir: &Path, subcommand: &str, cfg: &RunConfig, outputs: &[&str]) -> Result<()> {
    let mut config = serde_json::to_value(cfg)?;
    config["effective_scorer"] = json!(cfg.scorer_name()?);
    write_meta(dir, subcommand, config, outputs)
}

fn gen(args: &GenArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            WorldConfig::from_toml(&text)?
        }
        None => WorldConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let world = generate_world(&cfg)?;
    ensure_dir(&args.out)?;
    write_world(&world, &args.out)?;
    log::info!(
        "world: {} map frames, {} queries, {} tracks, {} boxes",
        world.map.len(),
        world.queries.len(),
        world.tracks.len(),
        world.ground_truth.len()
    );
    write_meta(
        &args.out,
        "gen",
        serde_json::to_value(&cfg)?,
        &["map", "queries", "tracks.csv", "gt_boxes.csv"],
    )
}

fn load_map(cfg: &RunConfig) -> Result<ViewSequenceMap> {
    let path = required(&cfg.map, "map")?;
    let map = read_feature_store(path).with_context(|| format!("map store {}", path.display()))?;
    log::info!(
        "map: {} frames, {} features",
        map.len(),
        map.feature_count()
    );
    Ok(map)
}

fn models_dir(cfg: &RunConfig) -> Result<&Path> {
    required(&cfg.models, "models")
}

fn learn_vocab(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let map = load_map(&cfg)?;
    let (vocab, _) = pipeline::learn_appearance(&map, &cfg)?;
    let dir = models_dir(&cfg)?;
    ensure_dir(dir)?;
    vocab.save(&dir.join(VOCAB_FILE))?;
    log::info!("{} words of dimension {}", vocab.word_count(), vocab.dim());
    run_meta(dir, "learn-vocab", &cfg, &[VOCAB_FILE])
}

fn learn_motion(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let map = load_map(&cfg)?;
    let tracks = read_tracks(required(&cfg.tracks, "tracks")?)?;
    let motion = pipeline::learn_motion(&map, &tracks, &cfg)?;
    let dir = models_dir(&cfg)?;
    ensure_dir(dir)?;
    motion.save(&dir.join(MOTION_FILE))?;
    log::info!("{} motion words", motion.len());
    run_meta(dir, "learn-motion", &cfg, &[MOTION_FILE])
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::load(path).with_context(|| format!("vocabulary {}", path.display()))
}

fn index(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let map = load_map(&cfg)?;
    let dir = models_dir(&cfg)?;
    let vocab = load_vocab(&dir.join(VOCAB_FILE))?;
    let index = pipeline::index_map(&map, &vocab, &cfg)?;
    index.save(&dir.join(INDEX_FILE))?;
    log::info!("indexed {} frames", index.len());
    run_meta(dir, "index", &cfg, &[INDEX_FILE])
}

/// A directory is a query store; anything else a single frame file.
fn load_queries(cfg: &RunConfig) -> Result<Vec<Frame>> {
    let path = required(&cfg.queries, "queries")?;
    if path.is_dir() {
        let store =
            read_feature_store(path).with_context(|| format!("query store {}", path.display()))?;
        Ok(store.frames)
    } else {
        let frame =
            read_frame_file(path).with_context(|| format!("query frame {}", path.display()))?;
        Ok(vec![frame])
    }
}

fn load_index(cfg: &RunConfig, map: &ViewSequenceMap, vocab: &Vocabulary) -> Result<BolcfIndex> {
    let path = models_dir(cfg)?.join(INDEX_FILE);
    if path.exists() {
        return Ok(BolcfIndex::load(&path, vocab)?);
    }
    log::warn!("{} not found; indexing the map now", path.display());
    Ok(pipeline::index_map(map, vocab, cfg)?)
}

/// A closed downstream pipe (e.g. `| head`) is not an error.
fn stdout_line(line: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Error::io("<stdout>", e).into())
        }
        _ => Ok(()),
    }
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = required(&cfg.output, "output")?;
    ensure_dir(dir)?;
    Ok(dir)
}

fn localize(args: &LocalizeArgs) -> Result<()> {
    let cfg = load_config(&args.run)?;
    let map = load_map(&cfg)?;
    let vocab = match &args.vocab {
        Some(p) => load_vocab(p)?,
        None => load_vocab(&models_dir(&cfg)?.join(VOCAB_FILE))?,
    };
    let index = match &cfg.models {
        Some(dir) if dir.join(INDEX_FILE).exists() => {
            BolcfIndex::load(&dir.join(INDEX_FILE), &vocab)?
        }
        _ => pipeline::index_map(&map, &vocab, &cfg)?,
    };
    let queries = load_queries(&cfg)?;
    let localizer = cfg.localizer()?;
    let mut results = Vec::with_capacity(queries.len());
    for q in &queries {
        let paired =
            scenediff::evaluation::build_test_pairing(&map, q.timestamp_index, cfg.exclusion)?;
        let keep: BTreeSet<u32> = paired.frame_ids().collect();
        let res = localizer.localize(q, &index.restricted_to(&keep), &vocab, cfg.r)?;
        for (i, r) in res.ranked.iter().enumerate() {
            stdout_line(&format!(
                "{}\t{}\t{}\t{}",
                q.frame_id,
                i + 1,
                r.frame_id,
                r.distance
            ))?;
        }
        results.push((q.frame_id, res));
    }
    let dir = output_dir(&cfg)?;
    write_localization(&dir.join("localization.csv"), &results)?;
    run_meta(dir, "localize", &cfg, &["localization.csv"])
}

fn detect(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let map = load_map(&cfg)?;
    let models = models_dir(&cfg)?;
    let vocab = load_vocab(&models.join(VOCAB_FILE))?;
    let index = load_index(&cfg, &map, &vocab)?;
    let dict = match map.kind {
        DescriptorKind::Dense { .. } => Some(ProjectionDictionary::new(
            cfg.projection_seed,
            cfg.b,
            vocab.dim(),
        )?),
        DescriptorKind::Binary { .. } => None,
    };
    let motion = if cfg.scorer()?.uses_motion() {
        let path = models.join(MOTION_FILE);
        Some(
            MotionVocabulary::load(&path)
                .with_context(|| format!("motion vocabulary {}", path.display()))?,
        )
    } else {
        None
    };
    let queries = load_queries(&cfg)?;
    let anomalous = pipeline::ego_motion_flags(&map, &cfg)?;
    let ctx = DetectionContext::new(&map, &vocab, dict.as_ref(), motion.as_ref())?;
    let detections = pipeline::detect_queries(&ctx, &index, &queries, &anomalous, &cfg)?;

    let dir = output_dir(&cfg)?;
    write_changes(&dir.join("changes.csv"), &pipeline::all_scores(&detections))?;
    let localizations: Vec<_> = queries
        .iter()
        .zip(&detections)
        .map(|(q, d)| (q.frame_id, d.localization.clone()))
        .collect();
    write_localization(&dir.join("localization.csv"), &localizations)?;
    log::info!(
        "scored {} queries with `{}`",
        queries.len(),
        cfg.scorer_name()?
    );
    run_meta(dir, "detect", &cfg, &["changes.csv", "localization.csv"])
}

fn load_scores(
    cfg: &RunConfig,
    scores: &Option<PathBuf>,
) -> Result<Vec<scenediff::change::ChangeScore>> {
    let path = match scores {
        Some(p) => p.clone(),
        None => required(&cfg.output, "output")?.join("changes.csv"),
    };
    let len = fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
    if len == 0 {
        return Err(Error::Validation(format!("{} is empty", path.display())).into());
    }
    let scores = read_changes(&path).with_context(|| format!("scores {}", path.display()))?;
    if scores.is_empty() {
        return Err(Error::Validation(format!("{} contains no scores", path.display())).into());
    }
    Ok(scores)
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(&args.run)?;
    let scores = load_scores(&cfg, &args.scores)?;
    let boxes = read_gt_boxes(&args.gt)?;
    let report = scenediff::evaluation::rank_changed_features(&scores, &boxes);
    let dir = output_dir(&cfg)?;
    write_report(&dir.join("report.csv"), &report)?;
    match report.median_rank() {
        Some(m) => stdout_line(&format!(
            "boxes={} uncovered={} median_rank={m} features={}",
            report.boxes.len(),
            report.uncovered(),
            report.total_features
        ))?,
        None => stdout_line(&format!(
            "boxes={} uncovered={} median_rank=none",
            report.boxes.len(),
            report.uncovered()
        ))?,
    }
    run_meta(dir, "evaluate", &cfg, &["report.csv"])
}

fn plot(args: &PlotArgs) -> Result<()> {
    let cfg = load_config(&args.run)?;
    let scores = load_scores(&cfg, &args.scores)?;
    let boxes = read_gt_boxes(&args.gt)?;
    let report = scenediff::evaluation::rank_changed_features(&scores, &boxes);
    let loc_path = match &args.localization {
        Some(p) => p.clone(),
        None => required(&cfg.output, "output")?.join("localization.csv"),
    };
    let tops = read_localization_top(&loc_path)?;
    let map_poses = read_odometry(&required(&cfg.map, "map")?.join("odometry.csv"))?;
    let query_poses = match &cfg.queries {
        Some(q) if q.is_dir() => read_odometry(&q.join("odometry.csv"))?,
        // a lone query frame is looked up in the map trajectory
        _ => map_poses.clone(),
    };
    let points = plot_data(&report, &tops, &query_poses, &map_poses)?;
    let dir = output_dir(&cfg)?;
    write_plot_data(&dir.join("plot_data.csv"), &points)?;
    run_meta(dir, "plot-data", &cfg, &["plot_data.csv"])
}
