//! Visual vocabulary: k-means words over dense descriptors, each word paired
//! with an exemplar (the training descriptor nearest its centroid).

use std::collections::HashSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::binio::{put_f32s, put_u32, read_file, to_u32, write_file, ByteReader};
use crate::error::{validation, Error, Result};
use crate::rng::seeded;

pub const VOCAB_MAGIC: &[u8; 4] = b"VVF1";

/// Squared Euclidean distance, accumulated in index order.
#[inline]
pub fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Index of the nearest row of `table` (`row_len` floats per row); ties go to
/// the smaller index.
#[inline]
pub(crate) fn nearest_row(query: &[f32], table: &[f32], row_len: usize) -> (usize, f32) {
    let mut best = (0, f32::INFINITY);
    for (i, row) in table.chunks_exact(row_len).enumerate() {
        let d = squared_distance(query, row);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub max_iterations: usize,
    /// Stop when the centroid shift, relative to the centroid norm, drops
    /// below this value.
    pub tolerance: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    dim: usize,
    centroids: Vec<f32>,
    exemplars: Vec<f32>,
}

impl Vocabulary {
    pub fn from_parts(
        dim: usize,
        centroids: Vec<Vec<f32>>,
        exemplars: Vec<Vec<f32>>,
    ) -> Result<Self> {
        if dim == 0 || centroids.is_empty() {
            return Err(validation("vocabulary needs dim > 0 and at least one word"));
        }
        if centroids.len() != exemplars.len() {
            return Err(validation(format!(
                "{} centroids but {} exemplars",
                centroids.len(),
                exemplars.len()
            )));
        }
        if centroids.iter().chain(&exemplars).any(|v| v.len() != dim) {
            return Err(validation(format!(
                "vocabulary rows must all have dim {dim}"
            )));
        }
        Ok(Self {
            dim,
            centroids: centroids.concat(),
            exemplars: exemplars.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word_count(&self) -> usize {
        self.centroids.len() / self.dim
    }

    /// `ceil(log2(word_count))`.
    pub fn word_bits(&self) -> u32 {
        let n = self.word_count();
        if n <= 1 {
            0
        } else {
            usize::BITS - (n - 1).leading_zeros()
        }
    }

    pub fn centroid(&self, word: u32) -> &[f32] {
        let w = word as usize;
        &self.centroids[w * self.dim..(w + 1) * self.dim]
    }

    pub fn centroids(&self) -> impl Iterator<Item = &[f32]> {
        self.centroids.chunks_exact(self.dim)
    }

    /// The exemplar descriptor of `word`.
    pub fn exemplar_of(&self, word: u32) -> Result<&[f32]> {
        let w = word as usize;
        if w >= self.word_count() {
            return Err(validation(format!(
                "word {word} out of range for a {}-word vocabulary",
                self.word_count()
            )));
        }
        Ok(&self.exemplars[w * self.dim..(w + 1) * self.dim])
    }

    pub(crate) fn exemplar_unchecked(&self, word: u32) -> &[f32] {
        let w = word as usize;
        &self.exemplars[w * self.dim..(w + 1) * self.dim]
    }

    /// Nearest word by Euclidean distance, smallest id on ties.
    pub fn quantize(&self, descriptor: &[f32]) -> Result<u32> {
        self.check_dim(descriptor.len())?;
        Ok(nearest_row(descriptor, &self.centroids, self.dim).0 as u32)
    }

    pub fn quantize_all(&self, descriptors: &[&[f32]]) -> Result<Vec<u32>> {
        if let Some(d) = descriptors.iter().find(|d| d.len() != self.dim) {
            self.check_dim(d.len())?;
        }
        Ok(descriptors
            .par_iter()
            .map(|d| nearest_row(d, &self.centroids, self.dim).0 as u32)
            .collect())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(validation(format!(
                "descriptor has {dim} components, vocabulary expects {}",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(12 + 8 * self.centroids.len());
        out.extend_from_slice(VOCAB_MAGIC);
        put_u32(&mut out, to_u32(self.word_count(), "word count")?);
        put_u32(&mut out, to_u32(self.dim, "dim")?);
        put_f32s(&mut out, &self.centroids);
        put_f32s(&mut out, &self.exemplars);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "vocabulary");
        r.expect_magic(VOCAB_MAGIC)?;
        let words = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if words == 0 || dim == 0 {
            return Err(Error::Format("vocabulary: empty word table".into()));
        }
        let centroids = r.f32_vec(words * dim)?;
        let exemplars = r.f32_vec(words * dim)?;
        r.finish()?;
        Ok(Self {
            dim,
            centroids,
            exemplars,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

fn count_distinct(data: &[&[f32]]) -> usize {
    let mut seen = HashSet::with_capacity(data.len());
    for d in data {
        seen.insert(d.iter().map(|x| x.to_bits()).collect::<Vec<u32>>());
    }
    seen.len()
}

/// k-means++ seeding followed by Lloyd iterations. Deterministic for a given
/// seed: assignments may run in parallel but every reduction is sequential.
pub fn learn_vocabulary(
    training: &[&[f32]],
    word_count: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<Vocabulary> {
    if training.is_empty() {
        return Err(Error::Learning("no training descriptors".into()));
    }
    if word_count == 0 {
        return Err(Error::Learning("word_count must be at least 1".into()));
    }
    let dim = training[0].len();
    if dim == 0 || training.iter().any(|t| t.len() != dim) {
        return Err(validation(
            "training descriptors must share one non-zero dimension",
        ));
    }
    let distinct = count_distinct(training);
    if word_count > distinct {
        return Err(Error::Learning(format!(
            "{word_count} words requested from {distinct} distinct training descriptors"
        )));
    }

    let mut rng = seeded(seed);
    let mut centroids = kmeans_plus_plus(training, word_count, &mut rng);
    let mut assignment = vec![0usize; training.len()];

    for iter in 0..params.max_iterations {
        let nearest: Vec<(usize, f32)> = training
            .par_iter()
            .map(|t| nearest_row(t, &centroids, dim))
            .collect();
        let mut sums = vec![0.0f64; word_count * dim];
        let mut counts = vec![0usize; word_count];
        for (i, (&(c, _), t)) in nearest.iter().zip(training).enumerate() {
            assignment[i] = c;
            counts[c] += 1;
            for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(t.iter()) {
                *s += x as f64;
            }
        }

        let mut next = vec![0.0f32; word_count * dim];
        // Empty clusters take the point worst served by its centroid.
        let mut taken = HashSet::new();
        for c in 0..word_count {
            let row = &mut next[c * dim..(c + 1) * dim];
            if counts[c] > 0 {
                for (r, s) in row.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *r = (*s / counts[c] as f64) as f32;
                }
            } else {
                let far = nearest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken.contains(i))
                    .fold((0, f32::NEG_INFINITY), |best, (i, &(_, d))| {
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    })
                    .0;
                taken.insert(far);
                row.copy_from_slice(training[far]);
            }
        }

        let mut shift = 0.0f64;
        let mut norm = 0.0f64;
        for (a, b) in centroids.iter().zip(&next) {
            shift += ((a - b) as f64).powi(2);
            norm += (*b as f64).powi(2);
        }
        centroids = next;
        let rel = shift.sqrt() / norm.sqrt().max(f64::MIN_POSITIVE);
        log::debug!("k-means iteration {iter}: relative shift {rel:.3e}");
        if rel < params.tolerance && taken.is_empty() {
            break;
        }
    }

    let exemplars: Vec<f32> = centroids
        .par_chunks_exact(dim)
        .map(|c| {
            let mut best = (0usize, f32::INFINITY);
            for (i, t) in training.iter().enumerate() {
                let d = squared_distance(c, t);
                if d < best.1 {
                    best = (i, d);
                }
            }
            training[best.0]
        })
        .flat_map_iter(|t| t.iter().copied())
        .collect();

    Ok(Vocabulary {
        dim,
        centroids,
        exemplars,
    })
}

fn kmeans_plus_plus(training: &[&[f32]], k: usize, rng: &mut impl Rng) -> Vec<f32> {
    let dim = training[0].len();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..training.len());
    centroids.extend_from_slice(training[first]);
    let mut d2: Vec<f64> = training
        .iter()
        .map(|t| squared_distance(t, training[first]) as f64)
        .collect();
    for _ in 1..k {
        // Already chosen points have weight zero, so a new distinct point is
        // always picked while distinct points remain.
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => d2.iter().position(|&d| d > 0.0).unwrap_or(0),
        };
        let chosen = training[next];
        centroids.extend_from_slice(chosen);
        for (d, t) in d2.iter_mut().zip(training) {
            let nd = squared_distance(t, chosen) as f64;
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalStream;

    fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut s = NormalStream::from_seed(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| s.next_normal() as f32).collect())
            .collect()
    }

    fn refs(rows: &[Vec<f32>]) -> Vec<&[f32]> {
        rows.iter().map(|r| r.as_slice()).collect()
    }

    #[test]
    fn word_bits_is_ceil_log2() {
        let v =
            |n: usize| Vocabulary::from_parts(1, vec![vec![0.0]; n], vec![vec![0.0]; n]).unwrap();
        assert_eq!(v(1).word_bits(), 0);
        assert_eq!(v(2).word_bits(), 1);
        assert_eq!(v(3).word_bits(), 2);
        assert_eq!(v(4096).word_bits(), 12);
        assert_eq!(v(4097).word_bits(), 13);
        assert_eq!(v(1 << 20).word_bits(), 20);
    }

    #[test]
    fn exact_clustering_of_k_distinct_points() {
        let rows = random_rows(6, 4, 1);
        let voc = learn_vocabulary(&refs(&rows), 6, 9, &KMeansParams::default()).unwrap();
        let mut got: Vec<Vec<f32>> = voc.centroids().map(|c| c.to_vec()).collect();
        let mut want = rows.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
        for w in 0..6 {
            assert!(rows.iter().any(|r| r == voc.exemplar_of(w).unwrap()));
        }
    }

    #[test]
    fn too_many_words_is_a_learning_error() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![3.0, 4.0]];
        let err = learn_vocabulary(&refs(&rows), 3, 0, &KMeansParams::default()).unwrap_err();
        assert!(matches!(err, Error::Learning(_)));
    }

    #[test]
    fn quantize_fixed_points_and_bounds() {
        let rows = random_rows(40, 8, 2);
        let voc = learn_vocabulary(&refs(&rows), 10, 3, &KMeansParams::default()).unwrap();
        for w in 0..10u32 {
            assert_eq!(voc.quantize(voc.centroid(w)).unwrap(), w);
        }
        assert!(voc.exemplar_of(10).is_err());
        assert!(voc.quantize(&[0.0; 7]).is_err());
    }

    #[test]
    fn learning_is_deterministic() {
        let rows = random_rows(300, 8, 4);
        let a = learn_vocabulary(&refs(&rows), 16, 5, &KMeansParams::default()).unwrap();
        let b = learn_vocabulary(&refs(&rows), 16, 5, &KMeansParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vvf_round_trip() {
        let rows = random_rows(30, 5, 6);
        let voc = learn_vocabulary(&refs(&rows), 7, 1, &KMeansParams::default()).unwrap();
        let bytes = voc.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"VVF1");
        assert_eq!(bytes.len(), 12 + 2 * 7 * 5 * 4);
        assert_eq!(Vocabulary::from_bytes(&bytes).unwrap(), voc);
        assert!(Vocabulary::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
