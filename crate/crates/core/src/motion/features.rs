use std::collections::{BTreeSet, HashMap};

use crate::error::{validation, Result};
use crate::feature::{Keypoint, OdometryPose};

use super::track::Track;

/// Default unit of ego-motion, meters of cumulative odometric travel.
pub const DEFAULT_UNIT_LENGTH: f64 = 1.0;

/// Start and end keypoint of a trajectory over one unit of ego-motion,
/// viewed as the 4-vector `(x_s, y_s, x_e, y_e)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionFeature {
    pub start: Keypoint,
    pub end: Keypoint,
}

impl MotionFeature {
    pub fn new(start: Keypoint, end: Keypoint) -> Self {
        Self { start, end }
    }

    pub fn from_array(v: [f32; 4]) -> Self {
        Self {
            start: Keypoint::new(v[0], v[1]),
            end: Keypoint::new(v[2], v[3]),
        }
    }

    pub fn to_array(&self) -> [f32; 4] {
        [self.start.x, self.start.y, self.end.x, self.end.y]
    }

    pub fn squared_distance(&self, other: &MotionFeature) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(&a, b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum()
    }

    pub fn distance(&self, other: &MotionFeature) -> f64 {
        self.squared_distance(other).sqrt()
    }
}

/// Cumulative travel distance at each posed frame, in frame-id order.
fn cumulative_travel(poses: &[OdometryPose]) -> HashMap<u32, f64> {
    let mut sorted: Vec<&OdometryPose> = poses.iter().collect();
    sorted.sort_by_key(|p| p.frame_id);
    let mut out = HashMap::with_capacity(sorted.len());
    let mut acc = 0.0;
    for (i, p) in sorted.iter().enumerate() {
        if i > 0 {
            acc += p.distance_to(sorted[i - 1]);
        }
        out.insert(p.frame_id, acc);
    }
    out
}

/// Cuts every track into unit-ego-motion trajectories.
///
/// For each start point the end point is the track position, linearly
/// interpolated between tracked frames, at the first moment the cumulative
/// ego displacement since the start reaches `unit_length`. Start frames in
/// `excluded_starts` (anomaly ego-motion) are skipped.
pub fn extract_motion_features(
    tracks: &[Track],
    poses: &[OdometryPose],
    unit_length: f64,
    excluded_starts: &BTreeSet<u32>,
) -> Result<Vec<MotionFeature>> {
    if !(unit_length > 0.0 && unit_length.is_finite()) {
        return Err(validation(format!(
            "unit length must be positive, got {unit_length}"
        )));
    }
    let travel = cumulative_travel(poses);
    let mut out = Vec::new();
    for track in tracks {
        track.validate()?;
        let cum: Vec<f64> = track
            .points
            .iter()
            .map(|(f, _)| {
                travel.get(f).copied().ok_or_else(|| {
                    validation(format!(
                        "missing pose for frame {f} (track {})",
                        track.track_id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        for a in 0..track.points.len() {
            let (start_frame, start) = track.points[a];
            if excluded_starts.contains(&start_frame) {
                continue;
            }
            let target = cum[a] + unit_length;
            let Some(b) = (a..track.points.len() - 1).find(|&b| cum[b + 1] >= target) else {
                continue;
            };
            let t = (target - cum[b]) / (cum[b + 1] - cum[b]);
            let (p, q) = (track.points[b].1, track.points[b + 1].1);
            let end = Keypoint::new(
                (p.x as f64 + t * (q.x as f64 - p.x as f64)) as f32,
                (p.y as f64 + t * (q.y as f64 - p.y as f64)) as f32,
            );
            out.push(MotionFeature::new(start, end));
        }
    }
    Ok(out)
}
