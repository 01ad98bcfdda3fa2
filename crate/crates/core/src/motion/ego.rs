//! Anomaly ego-motion: windows where the travel direction bends more than
//! a threshold.

use crate::error::{validation, Result};
use crate::feature::OdometryPose;

pub const DEFAULT_TC_DEGREES: f64 = 5.0;
/// Trajectory window length in frames. Must be even.
pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoMotionSegmentLabel {
    pub frame_id: u32,
    pub anomaly: bool,
    /// Circular standard deviation of the chord directions, radians.
    pub curvature: f64,
}

/// Circular standard deviation `sqrt(-2 ln R)` of a set of angles, where `R`
/// is the mean resultant length. Returns 0 for an empty set.
pub fn circular_std(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let r = (s.hypot(c) / angles.len() as f64).min(1.0);
    if r <= 0.0 {
        return f64::INFINITY;
    }
    (-2.0 * r.ln()).max(0.0).sqrt()
}

/// Curvature of the window starting at `poses[0]`: chord directions from
/// pose `i` to pose `i + L/2` for `i` in `0..L/2`. Zero-length chords carry
/// no direction and are skipped.
pub fn window_curvature(poses: &[OdometryPose]) -> (f64, bool) {
    let half = poses.len() / 2;
    let dirs: Vec<f64> = (0..half)
        .filter_map(|i| {
            let (a, b) = (&poses[i], &poses[i + half]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            (dx != 0.0 || dy != 0.0).then(|| dy.atan2(dx))
        })
        .collect();
    let degenerate = dirs.is_empty();
    (circular_std(&dirs), degenerate)
}

/// Labels every pose. A frame's window covers poses `k .. k + L`; frames
/// too close to the end for a full window take the last full window's
/// label.
pub fn detect_anomaly_ego_motion(
    poses: &[OdometryPose],
    window: usize,
    tc_radians: f64,
) -> Result<Vec<EgoMotionSegmentLabel>> {
    if window < 2 || !window.is_multiple_of(2) {
        return Err(validation(format!(
            "window length must be even and at least 2, got {window}"
        )));
    }
    if poses.windows(2).any(|w| w[1].frame_id <= w[0].frame_id) {
        return Err(validation(
            "poses must be ordered by strictly increasing frame id",
        ));
    }
    if poses.len() < window {
        return Err(validation(format!(
            "{} poses cannot fill a window of {window}",
            poses.len()
        )));
    }
    let full = poses.len() - window + 1;
    let mut labels = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let start = k.min(full - 1);
        let (curvature, degenerate) = window_curvature(&poses[start..start + window]);
        if degenerate && k == start {
            log::warn!(
                "ego-motion window at frame {} has no displacement; curvature taken as 0",
                pose.frame_id
            );
        }
        let curvature = if degenerate { 0.0 } else { curvature };
        labels.push(EgoMotionSegmentLabel {
            frame_id: pose.frame_id,
            anomaly: curvature > tc_radians,
            curvature,
        });
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, heading: f64) -> Vec<OdometryPose> {
        (0..n)
            .map(|i| {
                let s = i as f64 * 1.5;
                OdometryPose::new(
                    i as u32,
                    3.0 + s * heading.cos(),
                    -2.0 + s * heading.sin(),
                    heading,
                )
            })
            .collect()
    }

    #[test]
    fn straight_line_has_zero_curvature() {
        let labels = detect_anomaly_ego_motion(&straight(40, 0.7), 10, 5f64.to_radians()).unwrap();
        assert_eq!(labels.len(), 40);
        assert!(labels.iter().all(|l| !l.anomaly && l.curvature < 1e-6));
    }

    #[test]
    fn stationary_window_is_non_anomalous() {
        let poses: Vec<_> = (0..12)
            .map(|i| OdometryPose::new(i, 1.0, 1.0, 0.0))
            .collect();
        let labels = detect_anomaly_ego_motion(&poses, 4, 0.01).unwrap();
        assert!(labels.iter().all(|l| !l.anomaly && l.curvature == 0.0));
    }

    #[test]
    fn rejects_bad_windows() {
        let p = straight(10, 0.0);
        assert!(detect_anomaly_ego_motion(&p, 3, 0.1).is_err());
        assert!(detect_anomaly_ego_motion(&p, 0, 0.1).is_err());
        assert!(detect_anomaly_ego_motion(&p, 12, 0.1).is_err());
    }

    #[test]
    fn tail_frames_inherit_last_full_window() {
        let mut p = straight(10, 0.0);
        // bend the last few poses
        for (i, q) in p.iter_mut().enumerate().skip(6) {
            q.y += (i as f64 - 5.0).powi(2);
        }
        let labels = detect_anomaly_ego_motion(&p, 4, 0.05).unwrap();
        for l in &labels[6..] {
            assert_eq!(l.curvature, labels[6].curvature);
        }
    }

    #[test]
    fn circular_std_handles_wraparound() {
        let a = circular_std(&[3.1, -3.1]);
        let b = circular_std(&[0.0416, -0.0416]);
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}
