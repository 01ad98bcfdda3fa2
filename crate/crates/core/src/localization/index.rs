//! Per-frame word sets and the asymmetric NBNN image distance.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::binio::{put_u32, read_file, to_u32, write_file, ByteReader};
use crate::error::{validation, Error, Result};
use crate::feature::{Frame, ViewSequenceMap};
use crate::vocabulary::{squared_distance, Vocabulary};

pub const INDEX_MAGIC: &[u8; 4] = b"BIF1";

/// One mapped frame as its multiset of word ids (kept sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedFrame {
    pub frame_id: u32,
    pub words: Vec<u32>,
}

impl IndexedFrame {
    pub fn new(frame_id: u32, mut words: Vec<u32>) -> Self {
        words.sort_unstable();
        Self { frame_id, words }
    }

    pub fn distinct_words(&self) -> impl Iterator<Item = u32> + '_ {
        let mut last = None;
        self.words.iter().copied().filter(move |&w| {
            let fresh = last != Some(w);
            last = Some(w);
            fresh
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BolcfIndex {
    frames: Vec<IndexedFrame>,
    postings: BTreeMap<u32, Vec<usize>>,
}

impl BolcfIndex {
    /// Frames may arrive in any order; they are kept sorted by id.
    pub fn new(mut frames: Vec<IndexedFrame>) -> Result<Self> {
        frames.sort_by_key(|f| f.frame_id);
        if let Some(w) = frames.windows(2).find(|w| w[0].frame_id == w[1].frame_id) {
            return Err(validation(format!("frame {} indexed twice", w[0].frame_id)));
        }
        let mut postings: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, f) in frames.iter().enumerate() {
            for w in f.distinct_words() {
                postings.entry(w).or_default().push(i);
            }
        }
        Ok(Self { frames, postings })
    }

    pub fn frames(&self) -> &[IndexedFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, frame_id: u32) -> Option<&IndexedFrame> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Positions (into [`Self::frames`]) of frames containing `word`.
    pub fn frames_with_word(&self, word: u32) -> &[usize] {
        self.postings.get(&word).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sub-index over the given frame ids.
    pub fn restricted_to(&self, keep: &BTreeSet<u32>) -> BolcfIndex {
        let frames = self
            .frames
            .iter()
            .filter(|f| keep.contains(&f.frame_id))
            .cloned()
            .collect();
        BolcfIndex::new(frames).expect("subset of a valid index is valid")
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let n = vocab.word_count() as u64;
        if let Some((&w, _)) = self.postings.iter().next_back() {
            if w as u64 >= n {
                return Err(validation(format!(
                    "index references word {w} but the vocabulary has {n} words"
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        put_u32(&mut out, to_u32(self.frames.len(), "frame count")?);
        for f in &self.frames {
            put_u32(&mut out, f.frame_id);
            put_u32(&mut out, to_u32(f.words.len(), "word count")?);
            for &w in &f.words {
                put_u32(&mut out, w);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "index");
        r.expect_magic(INDEX_MAGIC)?;
        let n = r.u32()? as usize;
        let mut frames = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let frame_id = r.u32()?;
            let count = r.u32()? as usize;
            let words = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            frames.push(IndexedFrame::new(frame_id, words));
        }
        r.finish()?;
        BolcfIndex::new(frames).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }

    /// Loads an index and checks its word ids against `vocab`.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let index = Self::from_bytes(&read_file(path)?)?;
        index.check_vocabulary(vocab)?;
        Ok(index)
    }
}

/// Quantizes every selected frame of `map` into its word multiset.
pub fn build_index(
    map: &ViewSequenceMap,
    vocab: &Vocabulary,
    keyframes_only: bool,
) -> Result<BolcfIndex> {
    let keyframes: BTreeSet<u32> = map.keyframe_ids.iter().copied().collect();
    let mut frames = Vec::new();
    for frame in &map.frames {
        if keyframes_only && !keyframes.contains(&frame.frame_id) {
            continue;
        }
        let descriptors = frame.dense_descriptors()?;
        frames.push(IndexedFrame::new(
            frame.frame_id,
            vocab.quantize_all(&descriptors)?,
        ));
    }
    BolcfIndex::new(frames)
}

pub(crate) fn query_descriptors<'a>(
    query: &'a Frame,
    vocab: &Vocabulary,
) -> Result<Vec<&'a [f32]>> {
    let descriptors = query.dense_descriptors()?;
    for d in &descriptors {
        vocab.check_dim(d.len())?;
    }
    Ok(descriptors)
}

/// Sum over query features of the Euclidean distance to the nearest
/// exemplar among `reference_words`.
pub fn nbnn_distance(query: &Frame, reference_words: &[u32], vocab: &Vocabulary) -> Result<f64> {
    if reference_words.is_empty() {
        return Err(Error::Retrieval(
            "NBNN distance to an empty word set is undefined".into(),
        ));
    }
    for &w in reference_words {
        vocab.exemplar_of(w)?;
    }
    let descriptors = query_descriptors(query, vocab)?;
    let mut total = 0.0f64;
    for f in descriptors {
        let mut best = f32::INFINITY;
        for &w in reference_words {
            let d = squared_distance(f, vocab.exemplar_unchecked(w));
            if d < best {
                best = d;
            }
        }
        total += (best as f64).sqrt();
    }
    Ok(total)
}
