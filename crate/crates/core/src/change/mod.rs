//! Change likelihood of query features against the retrieved reference
//! frames: min-min appearance distance, optionally weighted by the motion
//! prior.

mod detect;
mod pool;
mod scorer;

pub use detect::{
    detect_changes, read_changes, read_localization_top, write_changes, write_localization,
    CandidateScope, ChangeScore, DetectOptions, Detection, DetectionContext, CHANGES_HEADER,
    LOCALIZATION_HEADER,
};
pub use pool::{frame_codes, MapCodes, PoolFeature, ReferencePool};
pub use scorer::{
    change_scorer_registry, eq1_match, likelihood_eq1, likelihood_eq3, nearest_candidates,
    AppearanceScorer, ChangeScorer, FeatureMatch, MotionContext, MotionEval, MotionScorer,
    MotionTerm, ScoringContext, DEFAULT_K, DEFAULT_SCORER,
};
