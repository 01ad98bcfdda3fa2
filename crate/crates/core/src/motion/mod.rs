//! Motion prior: unit-ego-motion keypoint trajectories, the motion
//! vocabulary learned from them, and anomaly ego-motion detection.

mod ego;
mod features;
mod track;
mod vocab;

use std::collections::BTreeSet;

use crate::error::{validation, Result};
use crate::feature::ViewSequenceMap;

pub use ego::{
    circular_std, detect_anomaly_ego_motion, window_curvature, EgoMotionSegmentLabel,
    DEFAULT_TC_DEGREES, DEFAULT_WINDOW,
};
pub use features::{extract_motion_features, MotionFeature, DEFAULT_UNIT_LENGTH};
pub use track::{read_tracks, write_tracks, Track, TRACKS_HEADER};
pub use vocab::{
    classify_motion, learn_motion_vocabulary, MotionVocabParams, MotionVocabulary, DEFAULT_TM,
    MOTION_MAGIC,
};

pub const DEFAULT_KEYFRAME_STRIDE: u32 = 10;

/// Frame ids divisible by `stride`.
pub fn select_keyframes(map: &ViewSequenceMap, stride: u32) -> Result<Vec<u32>> {
    if stride == 0 {
        return Err(validation("keyframe stride must be positive"));
    }
    Ok(map
        .frames
        .iter()
        .map(|f| f.frame_id)
        .filter(|id| id % stride == 0)
        .collect())
}

/// Frames labelled as anomaly ego-motion.
pub fn anomaly_frames(labels: &[EgoMotionSegmentLabel]) -> BTreeSet<u32> {
    labels
        .iter()
        .filter(|l| l.anomaly)
        .map(|l| l.frame_id)
        .collect()
}
