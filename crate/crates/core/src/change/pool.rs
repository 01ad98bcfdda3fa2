use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{validation, Error, Result};
use crate::feature::{BinaryCode, Descriptor, Frame, Keypoint, ViewSequenceMap};
use crate::projection::ProjectionDictionary;

/// A binary-coded feature with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolFeature {
    pub frame_id: u32,
    pub feature_id: u32,
    pub keypoint: Keypoint,
    pub code: BinaryCode,
}

/// Binary codes of a frame's features, in feature order. Dense descriptors
/// go through `dict`; binary ones are used as stored.
pub fn frame_codes(frame: &Frame, dict: Option<&ProjectionDictionary>) -> Result<Vec<BinaryCode>> {
    frame
        .features
        .iter()
        .map(|f| match &f.descriptor {
            Descriptor::Binary(code) => Ok(code.clone()),
            Descriptor::Dense(v) => dict
                .ok_or_else(|| {
                    Error::Configuration("dense descriptors need a projection dictionary".into())
                })?
                .binarize(v),
        })
        .collect()
}

/// Binary codes for every frame of a map, computed once and shared by all
/// queries.
#[derive(Debug, Clone, Default)]
pub struct MapCodes {
    frames: HashMap<u32, Vec<PoolFeature>>,
}

impl MapCodes {
    pub fn build(map: &ViewSequenceMap, dict: Option<&ProjectionDictionary>) -> Result<Self> {
        let frames = map
            .frames
            .par_iter()
            .map(|frame| {
                let codes = frame_codes(frame, dict)?;
                let feats = frame
                    .features
                    .iter()
                    .zip(codes)
                    .map(|(f, code)| PoolFeature {
                        frame_id: frame.frame_id,
                        feature_id: f.feature_id,
                        keypoint: f.keypoint,
                        code,
                    })
                    .collect();
                Ok((frame.frame_id, feats))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { frames })
    }

    pub fn frame(&self, frame_id: u32) -> Option<&[PoolFeature]> {
        self.frames.get(&frame_id).map(Vec::as_slice)
    }
}

/// The features of the retrieved reference frames, ordered by
/// `(frame_id, feature_id)` whatever order the frames arrive in.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferencePool {
    features: Vec<PoolFeature>,
}

impl ReferencePool {
    pub fn new(mut features: Vec<PoolFeature>) -> Result<Self> {
        features.sort_by_key(|f| (f.frame_id, f.feature_id));
        if let Some(w) = features
            .windows(2)
            .find(|w| (w[0].frame_id, w[0].feature_id) == (w[1].frame_id, w[1].feature_id))
        {
            return Err(validation(format!(
                "pool holds feature {} of frame {} twice",
                w[0].feature_id, w[0].frame_id
            )));
        }
        if let Some(first) = features.first() {
            let bits = first.code.bits();
            if features.iter().any(|f| f.code.bits() != bits) {
                return Err(validation("pool codes differ in bit width"));
            }
        }
        Ok(Self { features })
    }

    /// Pools the given frames of `codes`.
    pub fn from_frames(codes: &MapCodes, frame_ids: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut features = Vec::new();
        for id in frame_ids {
            let frame = codes
                .frame(id)
                .ok_or_else(|| validation(format!("reference frame {id} is not in the map")))?;
            features.extend_from_slice(frame);
        }
        Self::new(features)
    }

    pub fn features(&self) -> &[PoolFeature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn bits(&self) -> Option<usize> {
        self.features.first().map(|f| f.code.bits())
    }

    pub(crate) fn check_query(&self, code: &BinaryCode) -> Result<()> {
        match self.bits() {
            None => Err(Error::Scoring("reference pool is empty".into())),
            Some(b) if b != code.bits() => Err(validation(format!(
                "query code has {} bits, pool has {b}",
                code.bits()
            ))),
            Some(_) => Ok(()),
        }
    }
}
