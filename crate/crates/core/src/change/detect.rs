use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binio::write_file;
use crate::error::{validation, Error, Result};
use crate::feature::{Frame, Keypoint, ViewSequenceMap};
use crate::localization::{
    localizer_registry, BolcfIndex, LocalizationResult, Localizer, DEFAULT_TOP_R,
};
use crate::motion::{MotionVocabulary, DEFAULT_TM};
use crate::projection::ProjectionDictionary;
use crate::store::{expect_header, finish_csv};
use crate::vocabulary::Vocabulary;

use super::pool::{frame_codes, MapCodes, ReferencePool};
use super::scorer::{
    change_scorer_registry, ChangeScorer, ScoringContext, DEFAULT_K, DEFAULT_SCORER,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeScore {
    pub query_frame: u32,
    pub feature_id: u32,
    pub keypoint: Keypoint,
    pub likelihood: f64,
    pub matched_frame: u32,
    pub matched_feature: u32,
    pub anomaly_motion: bool,
}

/// Which retrieved frames the candidates are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateScope {
    /// All R retrieved frames.
    #[default]
    Union,
    /// Only the best-ranked frame.
    TopOne,
}

impl std::str::FromStr for CandidateScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(Self::Union),
            "top-one" => Ok(Self::TopOne),
            _ => Err(Error::Configuration(format!(
                "unknown candidate scope `{s}` (known: union, top-one)"
            ))),
        }
    }
}

#[derive(Clone)]
pub struct DetectOptions {
    pub r: usize,
    pub k: usize,
    pub tm: f64,
    pub scope: CandidateScope,
    /// The query frame is under anomaly ego-motion.
    pub query_anomaly: bool,
    pub scorer: Arc<dyn ChangeScorer>,
    pub localizer: Arc<dyn Localizer>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            r: DEFAULT_TOP_R,
            k: DEFAULT_K,
            tm: DEFAULT_TM,
            scope: CandidateScope::Union,
            query_anomaly: false,
            scorer: change_scorer_registry()
                .get(DEFAULT_SCORER)
                .expect("default scorer"),
            localizer: localizer_registry()
                .get("exact")
                .expect("default localizer"),
        }
    }
}

impl std::fmt::Debug for DetectOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DetectOptions")
            .field("r", &self.r)
            .field("k", &self.k)
            .field("tm", &self.tm)
            .field("scope", &self.scope)
            .field("query_anomaly", &self.query_anomaly)
            .field("scorer", &self.scorer.name())
            .field("localizer", &self.localizer.name())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection {
    pub localization: LocalizationResult,
    /// One score per query feature, by feature id.
    pub scores: Vec<ChangeScore>,
}

/// Models and precomputed map codes shared across queries.
pub struct DetectionContext<'a> {
    pub map: &'a ViewSequenceMap,
    pub vocab: &'a Vocabulary,
    pub dict: Option<&'a ProjectionDictionary>,
    pub motion_vocab: Option<&'a MotionVocabulary>,
    codes: MapCodes,
}

impl<'a> DetectionContext<'a> {
    pub fn new(
        map: &'a ViewSequenceMap,
        vocab: &'a Vocabulary,
        dict: Option<&'a ProjectionDictionary>,
        motion_vocab: Option<&'a MotionVocabulary>,
    ) -> Result<Self> {
        Ok(Self {
            map,
            vocab,
            dict,
            motion_vocab,
            codes: MapCodes::build(map, dict)?,
        })
    }

    /// Localizes `query` in `index` (whose frames must belong to the map)
    /// and scores every query feature against the retrieved frames.
    pub fn detect(
        &self,
        query: &Frame,
        index: &BolcfIndex,
        opts: &DetectOptions,
    ) -> Result<Detection> {
        if opts.scorer.uses_motion() && self.motion_vocab.is_none() {
            return Err(Error::Configuration(format!(
                "scorer `{}` needs a motion vocabulary",
                opts.scorer.name()
            )));
        }
        let localization = opts.localizer.localize(query, index, self.vocab, opts.r)?;
        let frame_ids: Vec<u32> = match opts.scope {
            CandidateScope::Union => localization.frame_ids().collect(),
            CandidateScope::TopOne => localization.frame_ids().take(1).collect(),
        };
        let pool = ReferencePool::from_frames(&self.codes, frame_ids)?;
        let ctx = ScoringContext {
            k: opts.k,
            tm: opts.tm,
            motion_vocab: self.motion_vocab,
            query_anomaly: opts.query_anomaly,
        };
        let codes = frame_codes(query, self.dict)?;
        let mut scores = query
            .features
            .par_iter()
            .zip(codes.par_iter())
            .map(|(f, code)| {
                let m = opts.scorer.score(f.keypoint, code, &pool, &ctx)?;
                let p = &pool.features()[m.matched];
                Ok(ChangeScore {
                    query_frame: query.frame_id,
                    feature_id: f.feature_id,
                    keypoint: f.keypoint,
                    likelihood: m.likelihood,
                    matched_frame: p.frame_id,
                    matched_feature: p.feature_id,
                    anomaly_motion: m.anomaly_motion,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        scores.sort_by_key(|s| s.feature_id);
        Ok(Detection {
            localization,
            scores,
        })
    }
}

/// One-shot detection; see [`DetectionContext`] for repeated queries.
#[allow(clippy::too_many_arguments)]
pub fn detect_changes(
    query: &Frame,
    map: &ViewSequenceMap,
    index: &BolcfIndex,
    vocab: &Vocabulary,
    dict: Option<&ProjectionDictionary>,
    motion_vocab: Option<&MotionVocabulary>,
    opts: &DetectOptions,
) -> Result<Detection> {
    DetectionContext::new(map, vocab, dict, motion_vocab)?.detect(query, index, opts)
}

pub const CHANGES_HEADER: [&str; 8] = [
    "query_frame",
    "feature_id",
    "x",
    "y",
    "likelihood",
    "matched_frame",
    "matched_feature",
    "anomaly_motion",
];

#[derive(Debug, Serialize, Deserialize)]
struct ChangeRow {
    query_frame: u32,
    feature_id: u32,
    x: f32,
    y: f32,
    likelihood: f64,
    matched_frame: u32,
    matched_feature: u32,
    anomaly_motion: u8,
}

pub fn write_changes(path: &Path, scores: &[ChangeScore]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CHANGES_HEADER)?;
    for s in scores {
        w.serialize(ChangeRow {
            query_frame: s.query_frame,
            feature_id: s.feature_id,
            x: s.keypoint.x,
            y: s.keypoint.y,
            likelihood: s.likelihood,
            matched_frame: s.matched_frame,
            matched_feature: s.matched_feature,
            anomaly_motion: s.anomaly_motion as u8,
        })?;
    }
    write_file(path, &finish_csv(w)?)
}

pub fn read_changes(path: &Path) -> Result<Vec<ChangeScore>> {
    let mut rdr = csv::Reader::from_path(path)?;
    expect_header(&mut rdr, path, &CHANGES_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: ChangeRow = row?;
        if !(r.likelihood >= 0.0 && r.likelihood.is_finite()) || r.anomaly_motion > 1 {
            return Err(validation(format!(
                "{}: bad row for query {} feature {}",
                path.display(),
                r.query_frame,
                r.feature_id
            )));
        }
        out.push(ChangeScore {
            query_frame: r.query_frame,
            feature_id: r.feature_id,
            keypoint: Keypoint::new(r.x, r.y),
            likelihood: r.likelihood,
            matched_frame: r.matched_frame,
            matched_feature: r.matched_feature,
            anomaly_motion: r.anomaly_motion == 1,
        });
    }
    Ok(out)
}

pub const LOCALIZATION_HEADER: [&str; 4] = ["query_frame", "rank", "frame_id", "distance"];

/// `query_frame,rank,frame_id,distance`, rank 1-based.
pub fn write_localization(path: &Path, results: &[(u32, LocalizationResult)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOCALIZATION_HEADER)?;
    for (q, res) in results {
        for (i, r) in res.ranked.iter().enumerate() {
            w.write_record([
                q.to_string(),
                (i + 1).to_string(),
                r.frame_id.to_string(),
                r.distance.to_string(),
            ])?;
        }
    }
    write_file(path, &finish_csv(w)?)
}

/// Best-ranked reference frame per query from a `localization.csv`.
pub fn read_localization_top(path: &Path) -> Result<std::collections::BTreeMap<u32, u32>> {
    let mut rdr = csv::Reader::from_path(path)?;
    expect_header(&mut rdr, path, &LOCALIZATION_HEADER)?;
    let mut top = std::collections::BTreeMap::new();
    for row in rdr.deserialize() {
        let (query, rank, frame, _distance): (u32, usize, u32, f64) = row?;
        if rank == 1 {
            top.insert(query, frame);
        }
    }
    Ok(top)
}
