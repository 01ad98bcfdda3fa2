//! Deterministic synthetic worlds: a ground-plane route driven `sessions`
//! times past roadside landmarks, observed through a pinhole camera, plus
//! query frames that contain inserted (changed) objects.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{write_gt_boxes, GroundTruthBox};
use crate::feature::{
    Descriptor, DescriptorKind, Frame, Keypoint, LocalFeature, OdometryPose, ViewSequenceMap,
    DEFAULT_IMAGE_HEIGHT, DEFAULT_IMAGE_WIDTH,
};
use crate::motion::{write_tracks, Track};
use crate::rng::{derive_seed, seeded, NormalStream};
use crate::store::write_feature_store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// Route position where the arc begins.
    pub start_frame: u32,
    /// Signed turn, degrees (positive turns left).
    pub arc_degrees: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub seed: u64,
    /// Traversals of the route recorded into the map.
    pub sessions: u32,
    /// Poses per traversal.
    pub route_frames: u32,
    /// Meters between consecutive poses.
    pub spacing: f64,
    pub curves: Vec<CurveSpec>,
    pub landmarks_per_meter: f64,
    /// Lateral distance of roadside landmarks from the route, meters.
    pub lateral_min: f64,
    pub lateral_max: f64,
    pub height_max: f64,
    pub changed_objects: u32,
    pub object_landmarks_min: u32,
    pub object_landmarks_max: u32,
    /// Edge length of the cube holding an object's landmarks, meters.
    pub object_size: f64,
    pub query_count: u32,
    /// Minimum route distance between two queries, in poses.
    pub query_separation: u32,
    /// Minimum timestamp gap between a query and the map frame at the same
    /// route position.
    pub exclusion: u64,
    pub descriptor_dim: usize,
    /// Per-component standard deviation of observation noise.
    pub descriptor_noise: f64,
    pub focal: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub camera_height: f64,
    pub min_depth: f64,
    pub max_depth: f64,
    /// Pixels added around the projected object to form its box.
    pub box_margin: f32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sessions: 2,
            route_frames: 400,
            spacing: 1.0,
            curves: vec![CurveSpec {
                start_frame: 200,
                arc_degrees: 90.0,
                radius: 20.0,
            }],
            landmarks_per_meter: 6.0,
            lateral_min: 4.0,
            lateral_max: 9.0,
            height_max: 6.0,
            changed_objects: 1,
            object_landmarks_min: 5,
            object_landmarks_max: 20,
            object_size: 1.5,
            query_count: 4,
            query_separation: 60,
            exclusion: 400,
            descriptor_dim: 32,
            descriptor_noise: 0.05,
            focal: 500.0,
            image_width: DEFAULT_IMAGE_WIDTH,
            image_height: DEFAULT_IMAGE_HEIGHT,
            camera_height: 1.5,
            min_depth: 1.0,
            max_depth: 40.0,
            box_margin: 2.0,
        }
    }
}

impl WorldConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Configuration(format!("world config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Configuration(format!("world config: {msg}")));
        if self.route_frames < 2 || self.sessions == 0 {
            return bad("need at least one session of 2 poses");
        }
        if !(self.spacing > 0.0
            && self.focal > 0.0
            && self.min_depth > 0.0
            && self.max_depth > self.min_depth)
        {
            return bad("spacing, focal and depth range must be positive");
        }
        if self.descriptor_dim == 0 || self.descriptor_noise.is_nan() || self.descriptor_noise < 0.0
        {
            return bad("descriptor_dim must be positive and noise non-negative");
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive");
        }
        if self.object_landmarks_min == 0 || self.object_landmarks_min > self.object_landmarks_max {
            return bad("object landmark range is empty");
        }
        if !(self.lateral_min >= 0.0
            && self.lateral_max >= self.lateral_min
            && self.landmarks_per_meter >= 0.0)
        {
            return bad("landmark placement range is empty");
        }
        if self
            .curves
            .iter()
            .any(|c| c.radius.is_nan() || c.radius <= 0.0)
        {
            return bad("curve radius must be positive");
        }
        Ok(())
    }
}

/// Poses along an arc of total length `length` that turns by `arc_angle`
/// radians, one every `spacing` meters starting at `start` (inclusive).
/// Zero turn gives a straight segment.
pub fn generate_arc(
    start: &OdometryPose,
    length: f64,
    arc_angle: f64,
    spacing: f64,
) -> Vec<OdometryPose> {
    let steps = (length / spacing + 1e-9).floor() as u32;
    (0..=steps)
        .map(|k| {
            let s = k as f64 * spacing;
            let id = start.frame_id + k;
            if arc_angle == 0.0 {
                OdometryPose::new(
                    id,
                    start.x + s * start.heading.cos(),
                    start.y + s * start.heading.sin(),
                    start.heading,
                )
            } else {
                let radius = length / arc_angle; // signed
                let (cx, cy) = (
                    start.x - radius * start.heading.sin(),
                    start.y + radius * start.heading.cos(),
                );
                let h = start.heading + s / radius;
                OdometryPose::new(id, cx + radius * h.sin(), cy - radius * h.cos(), h)
            }
        })
        .collect()
}

/// Constant-curvature arc of `radius` turning by `arc_angle` radians.
pub fn generate_curved_segment(
    start: &OdometryPose,
    arc_angle: f64,
    radius: f64,
    spacing: f64,
) -> Vec<OdometryPose> {
    generate_arc(start, radius * arc_angle.abs(), arc_angle, spacing)
}

/// One traversal of the route, `route_frames` poses from the origin
/// heading along +x, frame ids `0..route_frames`.
pub fn generate_route(cfg: &WorldConfig) -> Vec<OdometryPose> {
    let n = cfg.route_frames;
    let mut curves = cfg.curves.clone();
    curves.sort_by_key(|c| c.start_frame);
    let mut route = vec![OdometryPose::new(0, 0.0, 0.0, 0.0)];
    let mut next_curve = curves.into_iter().peekable();
    while (route.len() as u32) < n {
        let last = *route.last().expect("non-empty");
        let here = last.frame_id;
        let piece = match next_curve.peek() {
            Some(c) if c.start_frame <= here => {
                let c = next_curve.next().expect("peeked");
                let angle = c.arc_degrees.to_radians();
                let steps = (c.radius * angle.abs() / cfg.spacing).round().max(1.0);
                generate_arc(&last, steps * cfg.spacing, angle, cfg.spacing)
            }
            Some(c) => generate_arc(
                &last,
                (c.start_frame - here) as f64 * cfg.spacing,
                0.0,
                cfg.spacing,
            ),
            None => generate_arc(&last, (n - here) as f64 * cfg.spacing, 0.0, cfg.spacing),
        };
        route.extend(piece.into_iter().skip(1));
    }
    route.truncate(n as usize);
    route
}

#[derive(Debug, Clone)]
struct Landmark {
    position: [f64; 3],
    latent: Vec<f64>,
}

fn unit_gaussian(normals: &mut NormalStream, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| normals.next_normal()).collect();
    let n = v
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    v.into_iter().map(|x| x / n).collect()
}

/// Pinhole projection of a world point seen from `pose`; `None` when
/// outside the depth range or the image.
fn project(cfg: &WorldConfig, pose: &OdometryPose, p: &[f64; 3]) -> Option<Keypoint> {
    let (dx, dy) = (p[0] - pose.x, p[1] - pose.y);
    let (c, s) = (pose.heading.cos(), pose.heading.sin());
    let depth = dx * c + dy * s;
    let left = -dx * s + dy * c;
    if depth < cfg.min_depth || depth > cfg.max_depth {
        return None;
    }
    let u = cfg.image_width as f64 / 2.0 - cfg.focal * left / depth;
    let v = cfg.image_height as f64 / 2.0 - cfg.focal * (p[2] - cfg.camera_height) / depth;
    let k = Keypoint::new(u as f32, v as f32);
    k.in_bounds(cfg.image_width, cfg.image_height).then_some(k)
}

fn observe(latent: &[f64], normals: &mut NormalStream, sigma: f64) -> Descriptor {
    Descriptor::Dense(
        latent
            .iter()
            .map(|&x| (x + sigma * normals.next_normal()) as f32)
            .collect(),
    )
}

/// Frame of the visible landmarks, in a seeded random feature order.
fn render(
    cfg: &WorldConfig,
    frame_id: u32,
    noise_seed: u64,
    pose: &OdometryPose,
    landmarks: &[&Landmark],
) -> Frame {
    let mut normals = NormalStream::from_seed(noise_seed);
    let mut parts: Vec<(Keypoint, Descriptor)> = landmarks
        .iter()
        .filter_map(|l| project(cfg, pose, &l.position).map(|k| (k, l)))
        .map(|(k, l)| (k, observe(&l.latent, &mut normals, cfg.descriptor_noise)))
        .collect();
    parts.shuffle(normals.rng_mut());
    Frame {
        frame_id,
        timestamp_index: frame_id as u64,
        image_width: cfg.image_width,
        image_height: cfg.image_height,
        features: parts
            .into_iter()
            .enumerate()
            .map(|(i, (keypoint, descriptor))| LocalFeature {
                feature_id: i as u32,
                keypoint,
                descriptor,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedWorld {
    pub map: ViewSequenceMap,
    pub tracks: Vec<Track>,
    pub ground_truth: Vec<GroundTruthBox>,
    /// Query frames (ids equal timestamps) with their poses.
    pub queries: ViewSequenceMap,
}

fn roadside_landmarks(cfg: &WorldConfig, route: &[OdometryPose]) -> Vec<Landmark> {
    let mut normals = NormalStream::from_seed(derive_seed(cfg.seed, 1));
    let length = (route.len() - 1) as f64 * cfg.spacing;
    let count = (cfg.landmarks_per_meter * (length + cfg.max_depth)).round() as usize;
    (0..count)
        .map(|_| {
            let rng = normals.rng_mut();
            // extend the landmark strip behind the start and past the end
            let s: f64 = rng.random_range(-cfg.max_depth / 2.0..length + cfg.max_depth / 2.0);
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let lateral = side * rng.random_range(cfg.lateral_min..=cfg.lateral_max);
            let height = rng.random_range(0.0..=cfg.height_max);
            let anchor = route_point(route, s / cfg.spacing);
            let (c, sn) = (anchor.heading.cos(), anchor.heading.sin());
            let position = [anchor.x - lateral * sn, anchor.y + lateral * c, height];
            Landmark {
                position,
                latent: unit_gaussian(&mut normals, cfg.descriptor_dim),
            }
        })
        .collect()
}

/// Route pose at fractional position `t` (in poses); extrapolates straight
/// beyond both ends.
fn route_point(route: &[OdometryPose], t: f64) -> OdometryPose {
    let last = route.len() - 1;
    let (i, frac) = if t <= 0.0 {
        (0, t)
    } else if t >= last as f64 {
        (last - 1, t - (last - 1) as f64)
    } else {
        (t.floor() as usize, t - t.floor())
    };
    let (a, b) = (&route[i], &route[i + 1]);
    OdometryPose::new(
        0,
        a.x + frac * (b.x - a.x),
        a.y + frac * (b.y - a.y),
        a.heading,
    )
}

fn choose_query_positions(cfg: &WorldConfig) -> Result<Vec<u32>> {
    if cfg.query_count == 0 {
        return Ok(Vec::new());
    }
    let p = cfg.route_frames as u64;
    // the same position in an earlier session must survive the exclusion
    let valid: Vec<u32> = if cfg.sessions >= 2 && p >= cfg.exclusion {
        (0..cfg.route_frames).collect()
    } else {
        Vec::new()
    };
    let mut order = valid.clone();
    order.shuffle(&mut seeded(derive_seed(cfg.seed, 4)));
    let mut chosen: Vec<u32> = Vec::new();
    for pos in order {
        if chosen
            .iter()
            .all(|&c| c.abs_diff(pos) >= cfg.query_separation.max(1))
        {
            chosen.push(pos);
            if chosen.len() == cfg.query_count as usize {
                break;
            }
        }
    }
    if chosen.len() < cfg.query_count as usize {
        return Err(Error::Generation(format!(
            "{} queries requested but only {} route positions qualify ({} valid, separation {})",
            cfg.query_count,
            chosen.len(),
            valid.len(),
            cfg.query_separation
        )));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Landmarks of one changed object, placed ahead of `host` so that at
/// least half of them project into the image.
fn place_object(cfg: &WorldConfig, host: &OdometryPose, object: u32) -> Result<Vec<Landmark>> {
    let mut normals = NormalStream::from_seed(derive_seed(derive_seed(cfg.seed, 2), object as u64));
    let n = normals
        .rng_mut()
        .random_range(cfg.object_landmarks_min..=cfg.object_landmarks_max) as usize;
    let (c, s) = (host.heading.cos(), host.heading.sin());
    let far = (cfg.min_depth + 14.0).min(cfg.max_depth - cfg.object_size);
    let near = (cfg.min_depth + 6.0).min(far);
    for _ in 0..100 {
        let rng = normals.rng_mut();
        let depth = rng.random_range(near..=far);
        let lateral = rng.random_range(-3.0..=3.0);
        let base = rng.random_range(0.0..=1.0);
        let center = [
            host.x + depth * c - lateral * s,
            host.y + depth * s + lateral * c,
        ];
        let mut lms = Vec::with_capacity(n);
        for _ in 0..n {
            let rng = normals.rng_mut();
            let off: [f64; 3] = [
                rng.random_range(-0.5..=0.5) * cfg.object_size,
                rng.random_range(-0.5..=0.5) * cfg.object_size,
                rng.random_range(0.0..=1.0) * cfg.object_size,
            ];
            lms.push(Landmark {
                position: [center[0] + off[0], center[1] + off[1], base + off[2]],
                latent: unit_gaussian(&mut normals, cfg.descriptor_dim),
            });
        }
        let visible = lms
            .iter()
            .filter(|l| project(cfg, host, &l.position).is_some())
            .count();
        if 2 * visible >= n {
            return Ok(lms);
        }
    }
    Err(Error::Generation(format!(
        "could not place changed object {object} in view"
    )))
}

/// Maximal runs of consecutive frames in which each landmark is visible,
/// per session.
fn build_tracks(cfg: &WorldConfig, route: &[OdometryPose], landmarks: &[Landmark]) -> Vec<Track> {
    let p = cfg.route_frames;
    let mut tracks = Vec::new();
    for session in 0..cfg.sessions {
        for l in landmarks {
            let mut run: Vec<(u32, Keypoint)> = Vec::new();
            for (i, pose) in route.iter().enumerate() {
                match project(cfg, pose, &l.position) {
                    Some(k) => run.push((session * p + i as u32, k)),
                    None => flush(&mut run, &mut tracks),
                }
            }
            flush(&mut run, &mut tracks);
        }
    }
    tracks
}

fn flush(run: &mut Vec<(u32, Keypoint)>, tracks: &mut Vec<Track>) {
    if run.len() >= 2 {
        tracks.push(Track {
            track_id: tracks.len() as u32,
            points: std::mem::take(run),
        });
    }
    run.clear();
}

fn object_box(cfg: &WorldConfig, query_frame: u32, keypoints: &[Keypoint]) -> GroundTruthBox {
    let m = cfg.box_margin;
    let (w, h) = (cfg.image_width as f32, cfg.image_height as f32);
    let min_x = keypoints.iter().map(|k| k.x).fold(f32::INFINITY, f32::min);
    let max_x = keypoints
        .iter()
        .map(|k| k.x)
        .fold(f32::NEG_INFINITY, f32::max);
    let min_y = keypoints.iter().map(|k| k.y).fold(f32::INFINITY, f32::min);
    let max_y = keypoints
        .iter()
        .map(|k| k.y)
        .fold(f32::NEG_INFINITY, f32::max);
    GroundTruthBox {
        query_frame,
        x0: (min_x - m).max(0.0),
        y0: (min_y - m).max(0.0),
        x1: (max_x + m).min(w),
        y1: (max_y + m).min(h),
    }
}

pub fn generate_world(cfg: &WorldConfig) -> Result<GeneratedWorld> {
    cfg.validate()?;
    let route = generate_route(cfg);
    let p = cfg.route_frames;
    let landmarks = roadside_landmarks(cfg, &route);
    let stationary: Vec<&Landmark> = landmarks.iter().collect();

    let map_noise = derive_seed(cfg.seed, 3);
    let mut map = ViewSequenceMap::empty(DescriptorKind::Dense {
        dim: cfg.descriptor_dim,
    });
    for session in 0..cfg.sessions {
        for (i, pose) in route.iter().enumerate() {
            let id = session * p + i as u32;
            map.frames.push(render(
                cfg,
                id,
                derive_seed(map_noise, id as u64),
                pose,
                &stationary,
            ));
            map.poses.push(OdometryPose {
                frame_id: id,
                ..*pose
            });
        }
    }

    let positions = choose_query_positions(cfg)?;
    if cfg.changed_objects > 0 && positions.is_empty() {
        return Err(Error::Generation(
            "changed objects need at least one query".into(),
        ));
    }
    let objects: Vec<Vec<Landmark>> = (0..cfg.changed_objects)
        .map(|o| {
            place_object(
                cfg,
                &route[positions[o as usize % positions.len()] as usize],
                o,
            )
        })
        .collect::<Result<_>>()?;

    let query_noise = derive_seed(cfg.seed, 5);
    let all: Vec<&Landmark> = landmarks.iter().chain(objects.iter().flatten()).collect();
    let mut queries = ViewSequenceMap::empty(map.kind);
    let mut ground_truth = Vec::new();
    for &pos in &positions {
        // queries are re-visits during the last session
        let id = (cfg.sessions - 1) * p + pos;
        let pose = OdometryPose {
            frame_id: id,
            ..route[pos as usize]
        };
        queries.frames.push(render(
            cfg,
            id,
            derive_seed(query_noise, id as u64),
            &pose,
            &all,
        ));
        queries.poses.push(pose);
        for object in &objects {
            let ks: Vec<Keypoint> = object
                .iter()
                .filter_map(|l| project(cfg, &pose, &l.position))
                .collect();
            if !ks.is_empty() {
                ground_truth.push(object_box(cfg, id, &ks));
            }
        }
    }

    let tracks = build_tracks(cfg, &route, &landmarks);
    map.validate()?;
    queries.validate()?;
    Ok(GeneratedWorld {
        map,
        tracks,
        ground_truth,
        queries,
    })
}

/// Writes `map/`, `queries/` (feature stores), `tracks.csv` and
/// `gt_boxes.csv` under `out`.
pub fn write_world(world: &GeneratedWorld, out: &Path) -> Result<()> {
    write_feature_store(&world.map, &out.join("map"))?;
    write_feature_store(&world.queries, &out.join("queries"))?;
    write_tracks(&out.join("tracks.csv"), &world.tracks)?;
    write_gt_boxes(&out.join("gt_boxes.csv"), &world.ground_truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn small() -> WorldConfig {
        WorldConfig {
            route_frames: 120,
            exclusion: 100,
            query_count: 2,
            query_separation: 40,
            landmarks_per_meter: 2.0,
            image_width: 320,
            image_height: 240,
            focal: 160.0,
            curves: vec![],
            ..WorldConfig::default()
        }
    }

    #[test]
    fn quarter_arc_stays_on_its_circle() {
        let start = OdometryPose::new(0, 3.0, -2.0, 0.4);
        let arc = generate_curved_segment(&start, FRAC_PI_2, 10.0, 1.0);
        assert_eq!(arc.len(), 16);
        let (cx, cy) = (3.0 - 10.0 * 0.4f64.sin(), -2.0 + 10.0 * 0.4f64.cos());
        for p in &arc {
            assert!(((p.x - cx).hypot(p.y - cy) - 10.0).abs() < 1e-9);
        }
        for w in arc.windows(2) {
            // chord of a 1 m arc on a 10 m circle
            assert!((w[0].distance_to(&w[1]) - 20.0 * (0.05f64).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_angle_is_straight() {
        let start = OdometryPose::new(0, 0.0, 0.0, 0.0);
        let seg = generate_arc(&start, 5.0, 0.0, 1.0);
        assert_eq!(seg.len(), 6);
        assert!(seg
            .iter()
            .enumerate()
            .all(|(i, p)| p.x == i as f64 && p.y == 0.0 && p.heading == 0.0));
        assert_eq!(generate_curved_segment(&start, 0.0, 10.0, 1.0).len(), 1);
    }

    #[test]
    fn route_has_requested_length_and_spacing() {
        let cfg = WorldConfig::default();
        let route = generate_route(&cfg);
        assert_eq!(route.len(), 400);
        assert!(route
            .iter()
            .enumerate()
            .all(|(i, p)| p.frame_id == i as u32));
        // consecutive poses are one arc-length step apart (chord <= step)
        assert!(route.windows(2).all(|w| {
            let d = w[0].distance_to(&w[1]);
            d <= 1.0 + 1e-9 && d > 0.99
        }));
        let turned = route.last().unwrap().heading - route[0].heading;
        assert!((turned - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_world() {
        let a = generate_world(&small()).unwrap();
        let b = generate_world(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_world(&WorldConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.map, c.map);
    }

    #[test]
    fn no_changed_objects_no_ground_truth() {
        let w = generate_world(&WorldConfig {
            changed_objects: 0,
            ..small()
        })
        .unwrap();
        assert!(w.ground_truth.is_empty());
        assert_eq!(w.queries.len(), 2);
        assert_eq!(w.map.len(), 240);
    }

    #[test]
    fn queries_sit_on_the_route_in_the_last_session() {
        let w = generate_world(&small()).unwrap();
        for (f, p) in w.queries.frames.iter().zip(&w.queries.poses) {
            assert!(f.frame_id >= 120);
            let earlier = w.map.pose(f.frame_id - 120).unwrap();
            assert_eq!(
                (earlier.x, earlier.y, earlier.heading),
                (p.x, p.y, p.heading)
            );
            assert_eq!(f.timestamp_index, f.frame_id as u64);
        }
        assert!(!w.ground_truth.is_empty());
        for b in &w.ground_truth {
            b.validate().unwrap();
        }
    }

    #[test]
    fn too_many_queries_is_a_generation_error() {
        let err = generate_world(&WorldConfig {
            query_count: 10,
            ..small()
        })
        .unwrap_err();
        assert!(matches!(err, Error::Generation(_)));
        let single = WorldConfig {
            sessions: 1,
            ..small()
        };
        assert!(matches!(generate_world(&single), Err(Error::Generation(_))));
    }

    #[test]
    fn tracks_follow_the_projections() {
        let cfg = small();
        let w = generate_world(&cfg).unwrap();
        assert!(!w.tracks.is_empty());
        for t in w.tracks.iter().take(50) {
            t.validate().unwrap();
            for (frame, k) in &t.points {
                let frame = w.map.frame(*frame).unwrap();
                assert!(frame.features.iter().any(|f| f.keypoint == *k));
            }
        }
    }

    #[test]
    fn toml_overrides_defaults() {
        let cfg = WorldConfig::from_toml("seed = 7\nroute_frames = 50\ncurves = []\n").unwrap();
        assert_eq!((cfg.seed, cfg.route_frames, cfg.sessions), (7, 50, 2));
        assert!(WorldConfig::from_toml("bogus = 1").is_err());
    }
}
