//! Test pairing under global viewpoint uncertainty and the global rank
//! metric over merged change likelihoods.

mod io;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::change::ChangeScore;
use crate::error::{validation, Error, Result};
use crate::feature::{Keypoint, OdometryPose, ViewSequenceMap};

pub use io::{
    read_gt_boxes, write_gt_boxes, write_plot_data, write_report, GT_HEADER, PLOT_HEADER,
    REPORT_HEADER,
};

pub const DEFAULT_EXCLUSION: u64 = 400;

/// Annotated changed object, `[x0, x1) x [y0, y1)` in query pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub query_frame: u32,
    pub x0: f32,
    pub y0: f32,
    pub x1: f32,
    pub y1: f32,
}

impl GroundTruthBox {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x0 >= self.x1 || self.y0 >= self.y1 || self.x0 < 0.0 || self.y0 < 0.0 {
            return Err(validation(format!("degenerate box {self:?}")));
        }
        Ok(())
    }

    /// Keypoint strictly inside the box.
    pub fn contains(&self, k: Keypoint) -> bool {
        self.x0 < k.x && k.x < self.x1 && self.y0 < k.y && k.y < self.y1
    }
}

/// The map minus every frame whose timestamp is closer than `exclusion`
/// to the query's.
pub fn build_test_pairing(
    full_map: &ViewSequenceMap,
    query_timestamp: u64,
    exclusion: u64,
) -> Result<ViewSequenceMap> {
    let map = full_map.retain_frames(|f| f.timestamp_index.abs_diff(query_timestamp) >= exclusion);
    if map.is_empty() {
        return Err(Error::Pairing(format!(
            "no map frame is at least {exclusion} frames from timestamp {query_timestamp}"
        )));
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRank {
    pub gt: GroundTruthBox,
    /// Rank of the in-box feature with the largest likelihood; `None` when
    /// no feature lies inside the box.
    pub best_rank: Option<usize>,
    /// Ranks of every in-box feature, ascending.
    pub in_box_ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySummary {
    pub query_frame: u32,
    pub features: usize,
    pub boxes: usize,
    pub best_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankReport {
    pub total_features: usize,
    pub boxes: Vec<BoxRank>,
    pub queries: Vec<QuerySummary>,
}

impl RankReport {
    pub fn covered(&self) -> impl Iterator<Item = usize> + '_ {
        self.boxes.iter().filter_map(|b| b.best_rank)
    }

    pub fn uncovered(&self) -> usize {
        self.boxes.iter().filter(|b| b.best_rank.is_none()).count()
    }

    pub fn median_rank(&self) -> Option<f64> {
        let mut r: Vec<usize> = self.covered().collect();
        if r.is_empty() {
            return None;
        }
        r.sort_unstable();
        let n = r.len();
        Some(if n % 2 == 1 {
            r[n / 2] as f64
        } else {
            (r[n / 2 - 1] + r[n / 2]) as f64 / 2.0
        })
    }
}

/// 1-based global ranks of `scores`: descending likelihood, ties by
/// ascending (query frame, feature id). Returned in input order.
pub fn global_ranks(scores: &[ChangeScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&scores[a], &scores[b]);
        sb.likelihood
            .total_cmp(&sa.likelihood)
            .then((sa.query_frame, sa.feature_id).cmp(&(sb.query_frame, sb.feature_id)))
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Merges the scores of all queries into one descending ranking and reads
/// off each box's rank.
pub fn rank_changed_features(scores: &[ChangeScore], boxes: &[GroundTruthBox]) -> RankReport {
    let ranks = global_ranks(scores);
    let mut by_query: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, s) in scores.iter().enumerate() {
        by_query.entry(s.query_frame).or_default().push(i);
    }
    let empty = Vec::new();
    let box_ranks: Vec<BoxRank> = boxes
        .iter()
        .map(|gt| {
            let mut in_box: Vec<usize> = by_query
                .get(&gt.query_frame)
                .unwrap_or(&empty)
                .iter()
                .filter(|&&i| gt.contains(scores[i].keypoint))
                .map(|&i| ranks[i])
                .collect();
            in_box.sort_unstable();
            BoxRank {
                gt: *gt,
                best_rank: in_box.first().copied(),
                in_box_ranks: in_box,
            }
        })
        .collect();

    let mut queries: BTreeMap<u32, QuerySummary> = BTreeMap::new();
    for (&q, idx) in &by_query {
        queries.insert(
            q,
            QuerySummary {
                query_frame: q,
                features: idx.len(),
                boxes: 0,
                best_rank: None,
            },
        );
    }
    for b in &box_ranks {
        let s = queries.entry(b.gt.query_frame).or_insert(QuerySummary {
            query_frame: b.gt.query_frame,
            features: 0,
            boxes: 0,
            best_rank: None,
        });
        s.boxes += 1;
        s.best_rank = match (s.best_rank, b.best_rank) {
            (Some(a), Some(c)) => Some(a.min(c)),
            (a, c) => a.or(c),
        };
    }
    RankReport {
        total_features: scores.len(),
        boxes: box_ranks,
        queries: queries.into_values().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Boxes where the first method's rank is strictly smaller.
    pub wins: usize,
    pub losses: usize,
    /// Boxes covered by both methods with different ranks.
    pub non_tied: usize,
    pub boxes: usize,
    /// `rank_b - rank_a` per box, `None` when either side is uncovered.
    pub deltas: Vec<Option<i64>>,
}

impl Comparison {
    /// Wins over all boxes; ties and uncovered boxes count to neither.
    pub fn win_fraction(&self) -> f64 {
        if self.boxes == 0 {
            0.0
        } else {
            self.wins as f64 / self.boxes as f64
        }
    }

    /// Wins over the boxes where the methods differ.
    pub fn non_tied_win_fraction(&self) -> f64 {
        if self.non_tied == 0 {
            0.0
        } else {
            self.wins as f64 / self.non_tied as f64
        }
    }
}

pub fn compare_methods(a: &RankReport, b: &RankReport) -> Result<Comparison> {
    if a.boxes.len() != b.boxes.len() || a.boxes.iter().zip(&b.boxes).any(|(x, y)| x.gt != y.gt) {
        return Err(validation("reports cover different box sets"));
    }
    let deltas: Vec<Option<i64>> = a
        .boxes
        .iter()
        .zip(&b.boxes)
        .map(|(x, y)| Some(y.best_rank? as i64 - x.best_rank? as i64))
        .collect();
    let wins = deltas
        .iter()
        .filter(|d| matches!(d, Some(v) if *v > 0))
        .count();
    let losses = deltas
        .iter()
        .filter(|d| matches!(d, Some(v) if *v < 0))
        .count();
    Ok(Comparison {
        wins,
        losses,
        non_tied: wins + losses,
        boxes: a.boxes.len(),
        deltas,
    })
}

/// Rank of a query's best box against its localization error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub query_frame: u32,
    /// Meters between the query pose and the top-ranked reference pose.
    pub localization_error: f64,
    pub best_rank: usize,
}

/// One point per query having both a covered box and a localization.
pub fn plot_data(
    report: &RankReport,
    top_frames: &BTreeMap<u32, u32>,
    query_poses: &[OdometryPose],
    map_poses: &[OdometryPose],
) -> Result<Vec<PlotPoint>> {
    let find = |poses: &[OdometryPose], id: u32, what: &str| {
        poses
            .iter()
            .find(|p| p.frame_id == id)
            .copied()
            .ok_or_else(|| validation(format!("missing {what} pose for frame {id}")))
    };
    let mut out = Vec::new();
    for q in &report.queries {
        let (Some(rank), Some(&top)) = (q.best_rank, top_frames.get(&q.query_frame)) else {
            continue;
        };
        let qp = find(query_poses, q.query_frame, "query")?;
        let rp = find(map_poses, top, "map")?;
        out.push(PlotPoint {
            query_frame: q.query_frame,
            localization_error: qp.distance_to(&rp),
            best_rank: rank,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{DescriptorKind, Frame, OdometryPose};

    fn score(q: u32, f: u32, x: f32, likelihood: f64) -> ChangeScore {
        ChangeScore {
            query_frame: q,
            feature_id: f,
            keypoint: Keypoint::new(x, 5.0),
            likelihood,
            matched_frame: 0,
            matched_feature: 0,
            anomaly_motion: false,
        }
    }

    fn gt(q: u32, x0: f32, x1: f32) -> GroundTruthBox {
        GroundTruthBox {
            query_frame: q,
            x0,
            y0: 0.0,
            x1,
            y1: 10.0,
        }
    }

    fn timeline(n: u32) -> ViewSequenceMap {
        let mut map = ViewSequenceMap::empty(DescriptorKind::Dense { dim: 2 });
        for i in 0..n {
            map.frames.push(Frame::new(i, vec![]));
            map.poses.push(OdometryPose::new(i, i as f64, 0.0, 0.0));
        }
        map
    }

    #[test]
    fn pairing_arithmetic() {
        let map = timeline(2000);
        let kept = build_test_pairing(&map, 1000, DEFAULT_EXCLUSION).unwrap();
        assert_eq!(kept.len(), 1201);
        assert!(kept.frame(600).is_some() && kept.frame(1400).is_some());
        assert!(kept.frame(601).is_none() && kept.frame(1399).is_none());
        assert!(matches!(
            build_test_pairing(&timeline(400), 0, 400),
            Err(Error::Pairing(_))
        ));
    }

    #[test]
    fn single_top_feature_ranks_first() {
        let s = vec![score(0, 0, 50.0, 0.2), score(0, 1, 5.0, 9.0)];
        let r = rank_changed_features(&s, &[gt(0, 0.0, 10.0)]);
        assert_eq!(r.boxes[0].best_rank, Some(1));
        assert_eq!(r.total_features, 2);
    }

    #[test]
    fn box_rank_is_that_of_its_best_feature() {
        let mut s: Vec<ChangeScore> = (0..98)
            .map(|i| score(0, i, 500.0, 0.5 + i as f64 / 100.0))
            .collect();
        s.push(score(0, 98, 5.0, 0.9));
        s.push(score(0, 99, 6.0, 0.3));
        let r = rank_changed_features(&s, &[gt(0, 0.0, 10.0)]);
        let ranks = global_ranks(&s);
        assert_eq!(r.boxes[0].best_rank, Some(ranks[98]));
        assert_eq!(r.boxes[0].in_box_ranks, vec![ranks[98], ranks[99]]);
    }

    #[test]
    fn ties_resolve_by_query_then_feature() {
        let s = vec![
            score(1, 0, 0.0, 1.0),
            score(0, 3, 0.0, 1.0),
            score(0, 2, 0.0, 1.0),
        ];
        assert_eq!(global_ranks(&s), vec![3, 2, 1]);
    }

    #[test]
    fn boundary_and_empty_boxes_are_uncovered() {
        let s = vec![score(0, 0, 10.0, 1.0)];
        let r = rank_changed_features(&s, &[gt(0, 0.0, 10.0), gt(7, 0.0, 100.0)]);
        assert_eq!(r.uncovered(), 2);
        assert_eq!(r.median_rank(), None);
    }

    #[test]
    fn compare_counts_strict_wins() {
        let s = vec![score(0, 0, 5.0, 1.0), score(0, 1, 50.0, 2.0)];
        let t = vec![score(0, 0, 5.0, 3.0), score(0, 1, 50.0, 2.0)];
        let boxes = [gt(0, 0.0, 10.0)];
        let (a, b) = (
            rank_changed_features(&t, &boxes),
            rank_changed_features(&s, &boxes),
        );
        let c = compare_methods(&a, &b).unwrap();
        assert_eq!((c.wins, c.losses, c.deltas.clone()), (1, 0, vec![Some(1)]));
        assert_eq!(c.win_fraction(), 1.0);
        assert_eq!(compare_methods(&a, &a).unwrap().wins, 0);
        let other = rank_changed_features(&s, &[gt(1, 0.0, 10.0)]);
        assert!(compare_methods(&a, &other).is_err());
    }

    #[test]
    fn gt_csv_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt_boxes.csv");
        let boxes = vec![gt(3, 1.5, 20.0), gt(4, 0.0, 1.0)];
        write_gt_boxes(&p, &boxes).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("query_frame,x0,y0,x1,y1\n"));
        assert_eq!(read_gt_boxes(&p).unwrap(), boxes);
        std::fs::write(&p, "query_frame,x0,y0,x1,y1\n0,5,0,5,10\n").unwrap();
        assert!(read_gt_boxes(&p).is_err());
    }

    #[test]
    fn plot_points_use_top_frame_pose() {
        let s = vec![score(9, 0, 5.0, 1.0)];
        let r = rank_changed_features(&s, &[gt(9, 0.0, 10.0)]);
        let top = BTreeMap::from([(9, 2)]);
        let q = [OdometryPose::new(9, 3.0, 4.0, 0.0)];
        let m = [OdometryPose::new(2, 0.0, 0.0, 0.0)];
        let pts = plot_data(&r, &top, &q, &m).unwrap();
        assert_eq!(
            pts,
            vec![PlotPoint {
                query_frame: 9,
                localization_error: 5.0,
                best_rank: 1
            }]
        );
    }
}
