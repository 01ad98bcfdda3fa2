//! Domain types shared by every stage: keypoints, descriptors, frames, poses
//! and the view-sequence map itself.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{validation, Result};

/// Canonical capture size. Other sizes are allowed and recorded per frame.
pub const DEFAULT_IMAGE_WIDTH: u32 = 1024;
pub const DEFAULT_IMAGE_HEIGHT: u32 = 768;

/// Pixel position in native image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
}

impl Keypoint {
    pub fn new(x: f32, y: f32) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(&self, width: u32, height: u32) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f32 && self.y < height as f32
    }
}

/// Packed binary code. Bit `i` lives in byte `i / 8` at position
/// `7 - i % 8` (most significant bit first).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    bits: usize,
    bytes: Vec<u8>,
}

impl BinaryCode {
    pub fn zeros(bits: usize) -> Self {
        Self {
            bits,
            bytes: vec![0; bits.div_ceil(8)],
        }
    }

    pub fn from_bytes(bits: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != bits.div_ceil(8) {
            return Err(validation(format!(
                "{} bytes cannot hold a {bits}-bit code",
                bytes.len()
            )));
        }
        Ok(Self { bits, bytes })
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut code = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            code.set(i, b);
        }
        code
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.bits, "bit {i} out of range");
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.bits, "bit {i} out of range");
        let mask = 0x80 >> (i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bytes.iter().map(|b| b.count_ones()).sum()
    }

    /// Number of differing bits. Both codes must have the same width.
    pub fn hamming(&self, other: &BinaryCode) -> u32 {
        debug_assert_eq!(self.bits, other.bits);
        let mut a = self.bytes.chunks_exact(8);
        let mut b = other.bytes.chunks_exact(8);
        let mut total = 0;
        for (x, y) in a.by_ref().zip(b.by_ref()) {
            let x = u64::from_le_bytes(x.try_into().unwrap());
            let y = u64::from_le_bytes(y.try_into().unwrap());
            total += (x ^ y).count_ones();
        }
        for (x, y) in a.remainder().iter().zip(b.remainder()) {
            total += (x ^ y).count_ones();
        }
        total
    }
}

impl fmt::Debug for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryCode({}b ", self.bits)?;
        for b in &self.bytes {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    Dense(Vec<f32>),
    Binary(BinaryCode),
}

impl Descriptor {
    pub fn kind(&self) -> DescriptorKind {
        match self {
            Descriptor::Dense(v) => DescriptorKind::Dense { dim: v.len() },
            Descriptor::Binary(c) => DescriptorKind::Binary { bits: c.bits() },
        }
    }

    pub fn as_dense(&self) -> Option<&[f32]> {
        match self {
            Descriptor::Dense(v) => Some(v),
            Descriptor::Binary(_) => None,
        }
    }

    pub fn as_binary(&self) -> Option<&BinaryCode> {
        match self {
            Descriptor::Binary(c) => Some(c),
            Descriptor::Dense(_) => None,
        }
    }
}

/// Variant and width shared by all descriptors of a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Dense { dim: usize },
    Binary { bits: usize },
}

impl DescriptorKind {
    /// Bytes one descriptor occupies on disk.
    pub fn payload_len(&self) -> usize {
        match *self {
            DescriptorKind::Dense { dim } => dim * 4,
            DescriptorKind::Binary { bits } => bits.div_ceil(8),
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorKind::Dense { dim } => write!(f, "dense/{dim}"),
            DescriptorKind::Binary { bits } => write!(f, "binary/{bits}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeature {
    pub feature_id: u32,
    pub keypoint: Keypoint,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: u32,
    pub timestamp_index: u64,
    pub image_width: u32,
    pub image_height: u32,
    pub features: Vec<LocalFeature>,
}

impl Frame {
    /// Frame with the canonical image size and `timestamp_index == frame_id`.
    pub fn new(frame_id: u32, features: Vec<LocalFeature>) -> Self {
        Self {
            frame_id,
            timestamp_index: frame_id as u64,
            image_width: DEFAULT_IMAGE_WIDTH,
            image_height: DEFAULT_IMAGE_HEIGHT,
            features,
        }
    }

    /// Builds a frame from (keypoint, descriptor) pairs, numbering features
    /// in order.
    pub fn from_parts(
        frame_id: u32,
        image_width: u32,
        image_height: u32,
        parts: impl IntoIterator<Item = (Keypoint, Descriptor)>,
    ) -> Self {
        let features = parts
            .into_iter()
            .enumerate()
            .map(|(i, (keypoint, descriptor))| LocalFeature {
                feature_id: i as u32,
                keypoint,
                descriptor,
            })
            .collect();
        Self {
            frame_id,
            timestamp_index: frame_id as u64,
            image_width,
            image_height,
            features,
        }
    }

    pub fn dense_descriptors(&self) -> Result<Vec<&[f32]>> {
        self.features
            .iter()
            .map(|f| {
                f.descriptor.as_dense().ok_or_else(|| {
                    validation(format!(
                        "frame {} feature {} is not dense",
                        self.frame_id, f.feature_id
                    ))
                })
            })
            .collect()
    }

    /// Checks feature ids, keypoint bounds and descriptor uniformity.
    pub fn validate(&self, kind: Option<DescriptorKind>) -> Result<()> {
        let mut ids = BTreeSet::new();
        for f in &self.features {
            if !ids.insert(f.feature_id) {
                return Err(validation(format!(
                    "frame {}: duplicate feature id {}",
                    self.frame_id, f.feature_id
                )));
            }
            if !f.keypoint.in_bounds(self.image_width, self.image_height) {
                return Err(validation(format!(
                    "frame {}: feature {} at ({}, {}) outside {}x{}",
                    self.frame_id,
                    f.feature_id,
                    f.keypoint.x,
                    f.keypoint.y,
                    self.image_width,
                    self.image_height
                )));
            }
            if let Some(kind) = kind {
                if f.descriptor.kind() != kind {
                    return Err(validation(format!(
                        "frame {}: feature {} has {} descriptor, expected {}",
                        self.frame_id,
                        f.feature_id,
                        f.descriptor.kind(),
                        kind
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ground-plane odometry pose. Heading in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometryPose {
    pub frame_id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl OdometryPose {
    pub fn new(frame_id: u32, x: f64, y: f64, heading: f64) -> Self {
        Self {
            frame_id,
            x,
            y,
            heading: wrap_angle(heading),
        }
    }

    pub fn distance_to(&self, other: &OdometryPose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSequenceMap {
    pub kind: DescriptorKind,
    pub frames: Vec<Frame>,
    pub poses: Vec<OdometryPose>,
    pub keyframe_ids: Vec<u32>,
}

impl ViewSequenceMap {
    pub fn empty(kind: DescriptorKind) -> Self {
        Self {
            kind,
            frames: Vec::new(),
            poses: Vec::new(),
            keyframe_ids: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, frame_id: u32) -> Option<&Frame> {
        self.frames
            .binary_search_by_key(&frame_id, |f| f.frame_id)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub fn pose(&self, frame_id: u32) -> Option<&OdometryPose> {
        self.poses
            .binary_search_by_key(&frame_id, |p| p.frame_id)
            .ok()
            .map(|i| &self.poses[i])
    }

    pub fn frame_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.frames.iter().map(|f| f.frame_id)
    }

    pub fn feature_count(&self) -> usize {
        self.frames.iter().map(|f| f.features.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let DescriptorKind::Binary { bits } = self.kind {
            if bits == 0 || bits % 8 != 0 {
                return Err(validation(format!(
                    "binary descriptors must use a positive multiple of 8 bits, got {bits}"
                )));
            }
        }
        if let DescriptorKind::Dense { dim: 0 } = self.kind {
            return Err(validation("dense descriptors need dim > 0"));
        }
        for w in self.frames.windows(2) {
            if w[1].frame_id <= w[0].frame_id {
                return Err(validation(format!(
                    "frame ids not strictly increasing: {} then {}",
                    w[0].frame_id, w[1].frame_id
                )));
            }
            if w[1].timestamp_index < w[0].timestamp_index {
                return Err(validation(format!(
                    "timestamps decrease between frames {} and {}",
                    w[0].frame_id, w[1].frame_id
                )));
            }
        }
        for f in &self.frames {
            f.validate(Some(self.kind))?;
        }
        if self.poses.len() != self.frames.len() {
            let posed: BTreeSet<u32> = self.poses.iter().map(|p| p.frame_id).collect();
            if let Some(f) = self.frames.iter().find(|f| !posed.contains(&f.frame_id)) {
                return Err(validation(format!("missing pose for frame {}", f.frame_id)));
            }
            return Err(validation(format!(
                "{} poses for {} frames",
                self.poses.len(),
                self.frames.len()
            )));
        }
        for (f, p) in self.frames.iter().zip(&self.poses) {
            if f.frame_id != p.frame_id {
                return Err(validation(format!("missing pose for frame {}", f.frame_id)));
            }
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(validation(format!(
                    "non-finite pose for frame {}",
                    p.frame_id
                )));
            }
            if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&p.heading) {
                return Err(validation(format!(
                    "heading {} of frame {} outside [-pi, pi)",
                    p.heading, p.frame_id
                )));
            }
        }
        for &k in &self.keyframe_ids {
            if self.frame(k).is_none() {
                return Err(validation(format!(
                    "keyframe {k} is not a frame of the map"
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the frames (with their poses and keyframe flags) for which
    /// `keep` holds.
    pub fn retain_frames(&self, mut keep: impl FnMut(&Frame) -> bool) -> ViewSequenceMap {
        let mut frames = Vec::new();
        let mut poses = Vec::new();
        for (f, p) in self.frames.iter().zip(&self.poses) {
            if keep(f) {
                frames.push(f.clone());
                poses.push(*p);
            }
        }
        let kept: BTreeSet<u32> = frames.iter().map(|f| f.frame_id).collect();
        ViewSequenceMap {
            kind: self.kind,
            frames,
            poses,
            keyframe_ids: self
                .keyframe_ids
                .iter()
                .copied()
                .filter(|k| kept.contains(k))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_code_bit_order_is_msb_first() {
        let mut c = BinaryCode::zeros(16);
        c.set(0, true);
        c.set(9, true);
        assert_eq!(c.as_bytes(), &[0x80, 0x40]);
        assert!(c.get(0) && c.get(9) && !c.get(1));
    }

    #[test]
    fn hamming_counts_differing_bits() {
        let a = BinaryCode::from_bytes(128, vec![0xff; 16]).unwrap();
        let b = BinaryCode::zeros(128);
        assert_eq!(a.hamming(&b), 128);
        assert_eq!(a.hamming(&a), 0);
        let c = BinaryCode::from_bytes(24, vec![0b1010_0000, 0, 1]).unwrap();
        assert_eq!(c.hamming(&BinaryCode::zeros(24)), 3);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    fn tiny_map() -> ViewSequenceMap {
        let kind = DescriptorKind::Dense { dim: 2 };
        let frames = (0..3)
            .map(|i| {
                Frame::new(
                    i,
                    vec![LocalFeature {
                        feature_id: 0,
                        keypoint: Keypoint::new(1.0, 2.0),
                        descriptor: Descriptor::Dense(vec![0.0, 1.0]),
                    }],
                )
            })
            .collect();
        let poses = (0..3)
            .map(|i| OdometryPose::new(i, i as f64, 0.0, 0.0))
            .collect();
        ViewSequenceMap {
            kind,
            frames,
            poses,
            keyframe_ids: vec![0],
        }
    }

    #[test]
    fn validate_rejects_out_of_bounds_keypoints() {
        let mut m = tiny_map();
        m.validate().unwrap();
        m.frames[1].features[0].keypoint.x = 1024.0;
        assert!(matches!(m.validate(), Err(crate::Error::Validation(_))));
    }

    #[test]
    fn validate_rejects_mixed_descriptor_widths() {
        let mut m = tiny_map();
        m.frames[2].features[0].descriptor = Descriptor::Dense(vec![0.0; 3]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn validate_rejects_missing_pose() {
        let mut m = tiny_map();
        m.poses.remove(1);
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("missing pose for frame 1"), "{err}");
    }

    #[test]
    fn retain_frames_filters_poses_and_keyframes() {
        let m = tiny_map().retain_frames(|f| f.frame_id != 0);
        assert_eq!(m.frame_ids().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(m.poses.len(), 2);
        assert!(m.keyframe_ids.is_empty());
        m.validate().unwrap();
    }
}
