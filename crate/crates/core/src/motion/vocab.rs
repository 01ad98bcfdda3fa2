use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use crate::binio::{put_f32s, put_u32, read_file, to_u32, write_file, ByteReader};
use crate::error::{validation, Error, Result};
use crate::rng::{derive_seed, seeded};

use super::features::MotionFeature;

pub const MOTION_MAGIC: &[u8; 4] = b"MVF1";
/// Default motion-anomaly threshold in pixels (4D Euclidean).
pub const DEFAULT_TM: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionVocabParams {
    pub sample_size: usize,
    pub iterations: usize,
    pub output_words: usize,
    pub seed: u64,
}

impl Default for MotionVocabParams {
    fn default() -> Self {
        Self {
            sample_size: 10_000,
            iterations: 100,
            output_words: 1_000,
            seed: 0,
        }
    }
}

/// Motion words ordered by descending consistency votes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionVocabulary {
    pub words: Vec<MotionFeature>,
    pub votes: Vec<u32>,
}

impl MotionVocabulary {
    pub fn new(words: Vec<MotionFeature>, votes: Vec<u32>) -> Result<Self> {
        if words.len() != votes.len() {
            return Err(validation("one vote count per motion word"));
        }
        if votes.windows(2).any(|w| w[1] > w[0]) {
            return Err(validation(
                "motion words must be sorted by descending votes",
            ));
        }
        Ok(Self { words, votes })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Distance from `candidate` to its nearest motion word.
    pub fn nearest_distance(&self, candidate: &MotionFeature) -> Result<f64> {
        self.words
            .iter()
            .map(|w| w.squared_distance(candidate))
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
            .ok_or_else(|| Error::Classification("motion vocabulary is empty".into()))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(8 + 20 * self.words.len());
        out.extend_from_slice(MOTION_MAGIC);
        put_u32(&mut out, to_u32(self.words.len(), "motion word count")?);
        for (w, &v) in self.words.iter().zip(&self.votes) {
            put_f32s(&mut out, &w.to_array());
            put_u32(&mut out, v);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "motion vocabulary");
        r.expect_magic(MOTION_MAGIC)?;
        let n = r.u32()? as usize;
        let mut words = Vec::with_capacity(n.min(1 << 20));
        let mut votes = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let v = r.f32_vec(4)?;
            words.push(MotionFeature::from_array([v[0], v[1], v[2], v[3]]));
            votes.push(r.u32()?);
        }
        r.finish()?;
        Self::new(words, votes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

/// True when `candidate` lies farther than `tm` from every motion word.
pub fn classify_motion(
    candidate: &MotionFeature,
    vocab: &MotionVocabulary,
    tm: f64,
) -> Result<bool> {
    Ok(vocab.nearest_distance(candidate)? > tm)
}

/// Nearest neighbour of every sample member among the other members.
/// Returns (position of neighbour within `sample`, squared distance); ties
/// resolve to the smaller feature index.
pub(crate) fn sample_nearest_neighbours(
    features: &[MotionFeature],
    sample: &[usize],
) -> Vec<(usize, f64)> {
    // Sweep along the first coordinate, pruning on its gap.
    let mut order: Vec<usize> = (0..sample.len()).collect();
    let key = |p: usize| features[sample[p]].start.x as f64;
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(sample[a].cmp(&sample[b])));
    let mut rank = vec![0usize; sample.len()];
    for (r, &p) in order.iter().enumerate() {
        rank[p] = r;
    }

    (0..sample.len())
        .into_par_iter()
        .map(|p| {
            let q = &features[sample[p]];
            let qx = key(p);
            let mut best = (usize::MAX, f64::INFINITY);
            let consider = |best: &mut (usize, f64), o: usize| {
                let d = q.squared_distance(&features[sample[o]]);
                if d < best.1 || (d == best.1 && sample[o] < sample[best.0]) {
                    *best = (o, d);
                }
            };
            let r = rank[p];
            let mut lo = r;
            let mut hi = r + 1;
            loop {
                let mut moved = false;
                if lo > 0 {
                    let o = order[lo - 1];
                    let gap = qx - key(o);
                    if gap * gap <= best.1 {
                        consider(&mut best, o);
                        lo -= 1;
                        moved = true;
                    }
                }
                if hi < order.len() {
                    let o = order[hi];
                    let gap = key(o) - qx;
                    if gap * gap <= best.1 {
                        consider(&mut best, o);
                        hi += 1;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
            best
        })
        .collect()
}

/// Motion words by reciprocal nearest-neighbour voting.
///
/// Each iteration draws `sample_size` features without replacement and
/// retrieves, for every member `q`, its nearest neighbour `m` among the
/// other members. `q` passes when it is itself a nearest neighbour of `m`
/// (no member is strictly closer to `m` than `q`). The features with the
/// most passes become the words, ties by smaller index; features that never
/// pass are not returned.
pub fn learn_motion_vocabulary(
    features: &[MotionFeature],
    params: &MotionVocabParams,
) -> Result<MotionVocabulary> {
    if features.len() < 2 {
        return Err(Error::Learning(format!(
            "need at least 2 motion features, got {}",
            features.len()
        )));
    }
    if params.sample_size < 2 || params.output_words == 0 {
        return Err(validation("sample_size must be >= 2 and output_words >= 1"));
    }
    let n = features.len();
    let k = params.sample_size.min(n);
    let iteration_seeds: Vec<u64> = (0..params.iterations as u64)
        .map(|i| derive_seed(params.seed, i))
        .collect();

    let passes: Vec<Vec<usize>> = iteration_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = seeded(s);
            let sample = index::sample(&mut rng, n, k).into_vec();
            let nn = sample_nearest_neighbours(features, &sample);
            (0..sample.len())
                .filter(|&p| {
                    let (m, d) = nn[p];
                    d <= nn[m].1
                })
                .map(|p| sample[p])
                .collect()
        })
        .collect();

    let mut counts = vec![0u32; n];
    for list in &passes {
        for &i in list {
            counts[i] += 1;
        }
    }
    let mut ranked: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    ranked.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    ranked.truncate(params.output_words);
    MotionVocabulary::new(
        ranked.iter().map(|&i| features[i]).collect(),
        ranked.iter().map(|&i| counts[i]).collect(),
    )
}
