//! Stage functions composing the modules the way the CLI runs them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;

use crate::change::{ChangeScore, Detection, DetectionContext};
use crate::config::RunConfig;
use crate::error::Result;
use crate::evaluation::{build_test_pairing, rank_changed_features, GroundTruthBox, RankReport};
use crate::feature::{Frame, ViewSequenceMap};
use crate::localization::{build_index, BolcfIndex};
use crate::motion::{
    anomaly_frames, detect_anomaly_ego_motion, extract_motion_features, learn_motion_vocabulary,
    select_keyframes, MotionVocabulary, Track,
};
use crate::projection::ProjectionDictionary;
use crate::rng::seeded;
use crate::vocabulary::{learn_vocabulary, Vocabulary};

/// Learns the word vocabulary from the map's descriptors (optionally a
/// seeded subsample) and builds the projection dictionary.
pub fn learn_appearance(
    map: &ViewSequenceMap,
    cfg: &RunConfig,
) -> Result<(Vocabulary, ProjectionDictionary)> {
    let mut training: Vec<&[f32]> = Vec::with_capacity(map.feature_count());
    for frame in &map.frames {
        training.extend(frame.dense_descriptors()?);
    }
    if let Some(cap) = cfg.vocab_sample.filter(|&c| c < training.len()) {
        let mut picked = index::sample(&mut seeded(cfg.vocab_seed), training.len(), cap).into_vec();
        picked.sort_unstable();
        training = picked.into_iter().map(|i| training[i]).collect();
    }
    let vocab = learn_vocabulary(&training, cfg.word_count, cfg.vocab_seed, &cfg.kmeans())?;
    let dict = ProjectionDictionary::new(cfg.projection_seed, cfg.b, vocab.dim())?;
    Ok((vocab, dict))
}

/// Motion words from the map's tracks, skipping anomaly ego-motion starts.
pub fn learn_motion(
    map: &ViewSequenceMap,
    tracks: &[Track],
    cfg: &RunConfig,
) -> Result<MotionVocabulary> {
    let labels = detect_anomaly_ego_motion(&map.poses, cfg.window, cfg.tc_radians())?;
    let excluded = anomaly_frames(&labels);
    let features = extract_motion_features(tracks, &map.poses, cfg.unit_length, &excluded)?;
    log::info!(
        "{} motion features from {} tracks ({} anomaly frames excluded)",
        features.len(),
        tracks.len(),
        excluded.len()
    );
    learn_motion_vocabulary(&features, &cfg.motion_params())
}

/// Indexes all map frames, or only keyframes when configured. A map without
/// stored keyframes gets them by stride.
pub fn index_map(map: &ViewSequenceMap, vocab: &Vocabulary, cfg: &RunConfig) -> Result<BolcfIndex> {
    if cfg.keyframes_only && map.keyframe_ids.is_empty() {
        let mut with_keys = map.clone();
        with_keys.keyframe_ids = select_keyframes(map, cfg.stride)?;
        return build_index(&with_keys, vocab, true);
    }
    build_index(map, vocab, cfg.keyframes_only)
}

/// Anomaly ego-motion flag per map frame id. Queries are looked up by frame
/// id; a query absent from the map trajectory counts as non-anomalous.
pub fn ego_motion_flags(map: &ViewSequenceMap, cfg: &RunConfig) -> Result<BTreeSet<u32>> {
    if map.poses.len() < cfg.window {
        log::warn!(
            "map has {} poses, fewer than the window of {}; no frame is flagged",
            map.poses.len(),
            cfg.window
        );
        return Ok(BTreeSet::new());
    }
    Ok(anomaly_frames(&detect_anomaly_ego_motion(
        &map.poses,
        cfg.window,
        cfg.tc_radians(),
    )?))
}

/// Detects changes in each query against the map frames outside its
/// exclusion window.
pub fn detect_queries(
    ctx: &DetectionContext,
    index: &BolcfIndex,
    queries: &[Frame],
    anomalous: &BTreeSet<u32>,
    cfg: &RunConfig,
) -> Result<Vec<Detection>> {
    queries
        .iter()
        .map(|q| {
            let paired = build_test_pairing(ctx.map, q.timestamp_index, cfg.exclusion)?;
            let keep: BTreeSet<u32> = paired.frame_ids().collect();
            let sub = index.restricted_to(&keep);
            let opts = cfg.detect_options(anomalous.contains(&q.frame_id))?;
            ctx.detect(q, &sub, &opts)
        })
        .collect()
}

pub fn all_scores(detections: &[Detection]) -> Vec<ChangeScore> {
    detections
        .iter()
        .flat_map(|d| d.scores.iter().copied())
        .collect()
}

/// Top-ranked reference frame per query.
pub fn top_frames(queries: &[Frame], detections: &[Detection]) -> BTreeMap<u32, u32> {
    queries
        .iter()
        .zip(detections)
        .filter_map(|(q, d)| d.localization.top().map(|t| (q.frame_id, t.frame_id)))
        .collect()
}

pub fn evaluate(detections: &[Detection], boxes: &[GroundTruthBox]) -> RankReport {
    rank_changed_features(&all_scores(detections), boxes)
}
