use std::sync::Arc;

use crate::error::{Error, Result};
use crate::feature::{BinaryCode, Keypoint};
use crate::motion::{classify_motion, MotionFeature, MotionVocabulary, DEFAULT_TM};
use crate::registry::Registry;

use super::pool::ReferencePool;

pub const DEFAULT_K: usize = 10;

/// Likelihood of change of one query feature and the pool feature (index
/// into [`ReferencePool::features`]) that realized it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureMatch {
    pub likelihood: f64,
    pub matched: usize,
    pub anomaly_motion: bool,
}

/// Smallest Hamming distance from `code` to the pool and the first pool
/// feature attaining it.
pub fn eq1_match(code: &BinaryCode, pool: &ReferencePool) -> Result<(u32, usize)> {
    pool.check_query(code)?;
    let mut best = (u32::MAX, 0);
    for (i, p) in pool.features().iter().enumerate() {
        let d = code.hamming(&p.code);
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best)
}

/// Min over every feature of every reference frame of the Hamming distance.
pub fn likelihood_eq1(code: &BinaryCode, pool: &ReferencePool) -> Result<f64> {
    eq1_match(code, pool).map(|(d, _)| d as f64)
}

/// The `k` pool features nearest to `code` as (distance, pool index),
/// ascending, ties by pool order.
pub fn nearest_candidates(
    code: &BinaryCode,
    pool: &ReferencePool,
    k: usize,
) -> Result<Vec<(u32, usize)>> {
    pool.check_query(code)?;
    if k == 0 {
        return Err(Error::Validation("K must be at least 1".into()));
    }
    let mut all: Vec<(u32, usize)> = pool
        .features()
        .iter()
        .enumerate()
        .map(|(i, p)| (code.hamming(&p.code), i))
        .collect();
    if k < all.len() {
        all.select_nth_unstable(k - 1);
        all.truncate(k);
    }
    all.sort_unstable();
    Ok(all)
}

/// What multiplies M in the second term of the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionTerm {
    /// `(1 + M) * d`: the appearance distance, twice when M is set.
    Literal,
    /// `d + M * m`, with `m` the 4D distance to the nearest motion word.
    Separate,
}

/// Where M is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionEval {
    /// Each candidate's own hypothesized motion.
    PerCandidate,
    /// Once, at the appearance-nearest candidate, for all candidates.
    NearestOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct MotionContext<'a> {
    pub vocab: &'a MotionVocabulary,
    pub tm: f64,
    /// Query frame under anomaly ego-motion: M is forced to 0.
    pub query_anomaly: bool,
}

impl MotionContext<'_> {
    /// (M, 4D distance to the nearest word) for the pairing query -> candidate.
    fn evaluate(&self, query: Keypoint, reference: Keypoint) -> Result<(bool, f64)> {
        if self.query_anomaly {
            return Ok((false, 0.0));
        }
        let hypothesis = MotionFeature::new(query, reference);
        let m = classify_motion(&hypothesis, self.vocab, self.tm)?;
        let dist = if m {
            self.vocab.nearest_distance(&hypothesis)?
        } else {
            0.0
        };
        Ok((m, dist))
    }
}

/// Min over the `k` appearance-nearest candidates of the motion-weighted
/// distance. Without a motion context M is 0 throughout.
pub fn likelihood_eq3(
    keypoint: Keypoint,
    code: &BinaryCode,
    pool: &ReferencePool,
    k: usize,
    motion: Option<&MotionContext>,
    term: MotionTerm,
    eval: MotionEval,
) -> Result<FeatureMatch> {
    let candidates = nearest_candidates(code, pool, k)?;
    let features = pool.features();
    let fixed = match (motion, eval) {
        (Some(ctx), MotionEval::NearestOnly) => {
            Some(ctx.evaluate(keypoint, features[candidates[0].1].keypoint)?)
        }
        _ => None,
    };
    let mut best: Option<FeatureMatch> = None;
    for &(d, i) in &candidates {
        let d = d as f64;
        // every score is at least d, so later candidates cannot win
        if best.is_some_and(|b| d >= b.likelihood) {
            break;
        }
        let (m, motion_dist) = match (motion, fixed) {
            (_, Some(f)) => f,
            (Some(ctx), None) => ctx.evaluate(keypoint, features[i].keypoint)?,
            (None, _) => (false, 0.0),
        };
        let score = match (term, m) {
            (_, false) => d,
            (MotionTerm::Literal, true) => 2.0 * d,
            (MotionTerm::Separate, true) => d + motion_dist,
        };
        if best.is_none_or(|b| score < b.likelihood) {
            best = Some(FeatureMatch {
                likelihood: score,
                matched: i,
                anomaly_motion: m,
            });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub k: usize,
    pub tm: f64,
    pub motion_vocab: Option<&'a MotionVocabulary>,
    pub query_anomaly: bool,
}

impl Default for ScoringContext<'_> {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            tm: DEFAULT_TM,
            motion_vocab: None,
            query_anomaly: false,
        }
    }
}

/// Per-feature change likelihood against a reference pool.
pub trait ChangeScorer: Send + Sync {
    fn name(&self) -> &'static str;

    fn uses_motion(&self) -> bool;

    fn score(
        &self,
        keypoint: Keypoint,
        code: &BinaryCode,
        pool: &ReferencePool,
        ctx: &ScoringContext,
    ) -> Result<FeatureMatch>;
}

/// Appearance only: the min-min Hamming distance.
#[derive(Debug, Default, Clone, Copy)]
pub struct AppearanceScorer;

impl ChangeScorer for AppearanceScorer {
    fn name(&self) -> &'static str {
        "appearance"
    }

    fn uses_motion(&self) -> bool {
        false
    }

    fn score(
        &self,
        _: Keypoint,
        code: &BinaryCode,
        pool: &ReferencePool,
        _: &ScoringContext,
    ) -> Result<FeatureMatch> {
        let (d, i) = eq1_match(code, pool)?;
        Ok(FeatureMatch {
            likelihood: d as f64,
            matched: i,
            anomaly_motion: false,
        })
    }
}

/// Appearance weighted by the motion prior over the K nearest candidates.
#[derive(Debug, Clone, Copy)]
pub struct MotionScorer {
    pub name: &'static str,
    pub term: MotionTerm,
    pub eval: MotionEval,
}

impl ChangeScorer for MotionScorer {
    fn name(&self) -> &'static str {
        self.name
    }

    fn uses_motion(&self) -> bool {
        true
    }

    fn score(
        &self,
        keypoint: Keypoint,
        code: &BinaryCode,
        pool: &ReferencePool,
        ctx: &ScoringContext,
    ) -> Result<FeatureMatch> {
        let vocab = ctx.motion_vocab.ok_or_else(|| {
            Error::Configuration(format!("scorer `{}` needs a motion vocabulary", self.name))
        })?;
        let motion = MotionContext {
            vocab,
            tm: ctx.tm,
            query_anomaly: ctx.query_anomaly,
        };
        likelihood_eq3(
            keypoint,
            code,
            pool,
            ctx.k,
            Some(&motion),
            self.term,
            self.eval,
        )
    }
}

pub const DEFAULT_SCORER: &str = "motion";

/// Registry with `appearance`, `motion` (the default, literal form),
/// `motion-separate` and `motion-nearest-only`.
pub fn change_scorer_registry() -> Registry<dyn ChangeScorer> {
    let mut r: Registry<dyn ChangeScorer> = Registry::new("change scorer");
    r.register("appearance", Arc::new(AppearanceScorer));
    for (name, term, eval) in [
        ("motion", MotionTerm::Literal, MotionEval::PerCandidate),
        (
            "motion-separate",
            MotionTerm::Separate,
            MotionEval::PerCandidate,
        ),
        (
            "motion-nearest-only",
            MotionTerm::Literal,
            MotionEval::NearestOnly,
        ),
    ] {
        r.register(name, Arc::new(MotionScorer { name, term, eval }));
    }
    r
}
