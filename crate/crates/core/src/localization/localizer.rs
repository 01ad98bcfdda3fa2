use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::index::{query_descriptors, BolcfIndex, IndexedFrame};
use crate::error::{validation, Error, Result};
use crate::feature::Frame;
use crate::registry::Registry;
use crate::vocabulary::{squared_distance, Vocabulary};

pub const DEFAULT_TOP_R: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedFrame {
    pub frame_id: u32,
    pub distance: f64,
}

/// Top-ranked reference frames, nearest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalizationResult {
    pub ranked: Vec<RankedFrame>,
}

impl LocalizationResult {
    pub fn frame_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.ranked.iter().map(|r| r.frame_id)
    }

    pub fn top(&self) -> Option<&RankedFrame> {
        self.ranked.first()
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Map-relative viewpoint retrieval.
pub trait Localizer: Send + Sync {
    fn name(&self) -> &'static str;

    /// The (up to) `r` indexed frames nearest to `query`, ascending by
    /// distance, ties by smaller frame id.
    fn localize(
        &self,
        query: &Frame,
        index: &BolcfIndex,
        vocab: &Vocabulary,
        r: usize,
    ) -> Result<LocalizationResult>;
}

fn check_request(index: &BolcfIndex, r: usize) -> Result<()> {
    if r == 0 {
        return Err(validation("R must be at least 1"));
    }
    if index.is_empty() {
        return Err(Error::Retrieval(
            "cannot localize against an empty index".into(),
        ));
    }
    Ok(())
}

/// Scores frames against a query, memoizing per-word exemplar distances so
/// each (feature, word) pair is evaluated once. The arithmetic matches
/// [`super::nbnn_distance`] exactly.
struct NbnnScorer<'a> {
    query: Vec<&'a [f32]>,
    table: HashMap<u32, Vec<f32>>,
}

impl<'a> NbnnScorer<'a> {
    fn new<'f>(
        query: &'a Frame,
        frames: impl Iterator<Item = &'f IndexedFrame>,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        let query = query_descriptors(query, vocab)?;
        let words: BTreeSet<u32> = frames.flat_map(|f| f.words.iter().copied()).collect();
        if let Some(&w) = words.iter().next_back() {
            vocab.exemplar_of(w)?;
        }
        let table = words
            .into_par_iter()
            .map(|w| {
                let ex = vocab.exemplar_unchecked(w);
                (w, query.iter().map(|f| squared_distance(f, ex)).collect())
            })
            .collect();
        Ok(Self { query, table })
    }

    fn distance(&self, frame: &IndexedFrame) -> f64 {
        let mut best = vec![f32::INFINITY; self.query.len()];
        for w in frame.distinct_words() {
            for (b, &d) in best.iter_mut().zip(&self.table[&w]) {
                if d < *b {
                    *b = d;
                }
            }
        }
        best.iter().map(|&d| (d as f64).sqrt()).sum()
    }

    fn rank<'f>(
        &self,
        frames: impl ParallelIterator<Item = &'f IndexedFrame>,
        r: usize,
    ) -> LocalizationResult {
        let mut ranked: Vec<RankedFrame> = frames
            .filter(|f| !f.words.is_empty())
            .map(|f| RankedFrame {
                frame_id: f.frame_id,
                distance: self.distance(f),
            })
            .collect();
        ranked.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.frame_id.cmp(&b.frame_id))
        });
        ranked.truncate(r);
        LocalizationResult { ranked }
    }
}

/// Evaluates the NBNN distance against every indexed frame.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactLocalizer;

impl Localizer for ExactLocalizer {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn localize(
        &self,
        query: &Frame,
        index: &BolcfIndex,
        vocab: &Vocabulary,
        r: usize,
    ) -> Result<LocalizationResult> {
        check_request(index, r)?;
        let scorer = NbnnScorer::new(query, index.frames().iter(), vocab)?;
        Ok(scorer.rank(index.frames().par_iter(), r))
    }
}

/// Re-ranks only frames sharing at least one word with the quantized query.
/// Falls back to the exact scan when fewer than `r` frames share a word.
#[derive(Debug, Default, Clone, Copy)]
pub struct ShortlistLocalizer;

impl Localizer for ShortlistLocalizer {
    fn name(&self) -> &'static str {
        "shortlist"
    }

    fn localize(
        &self,
        query: &Frame,
        index: &BolcfIndex,
        vocab: &Vocabulary,
        r: usize,
    ) -> Result<LocalizationResult> {
        check_request(index, r)?;
        let descriptors = query_descriptors(query, vocab)?;
        let query_words: BTreeSet<u32> = vocab.quantize_all(&descriptors)?.into_iter().collect();
        let shortlist: BTreeSet<usize> = query_words
            .iter()
            .flat_map(|&w| index.frames_with_word(w).iter().copied())
            .collect();
        if shortlist.len() < r {
            log::debug!(
                "shortlist of {} frames is smaller than R={r}; scanning all frames",
                shortlist.len()
            );
            return ExactLocalizer.localize(query, index, vocab, r);
        }
        let frames: Vec<&IndexedFrame> = shortlist.iter().map(|&i| &index.frames()[i]).collect();
        let scorer = NbnnScorer::new(query, frames.iter().copied(), vocab)?;
        Ok(scorer.rank(frames.into_par_iter(), r))
    }
}

/// Registry with `exact` and `shortlist`.
pub fn localizer_registry() -> Registry<dyn Localizer> {
    let mut r: Registry<dyn Localizer> = Registry::new("localizer");
    r.register("exact", Arc::new(ExactLocalizer));
    r.register("shortlist", Arc::new(ShortlistLocalizer));
    r
}
