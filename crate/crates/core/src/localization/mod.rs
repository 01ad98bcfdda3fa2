//! Viewpoint localization against the map: bag-of-words frame index and
//! NBNN ranking of reference frames.

mod index;
mod localizer;

pub use index::{build_index, nbnn_distance, BolcfIndex, IndexedFrame, INDEX_MAGIC};
pub use localizer::{
    localizer_registry, ExactLocalizer, LocalizationResult, Localizer, RankedFrame,
    ShortlistLocalizer, DEFAULT_TOP_R,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{
        Descriptor, DescriptorKind, Frame, Keypoint, OdometryPose, ViewSequenceMap,
    };
    use crate::vocabulary::Vocabulary;

    fn line_vocab() -> Vocabulary {
        // words at 0, 1, ..., 9 on a line; exemplars equal centroids
        let rows: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32, 0.0]).collect();
        Vocabulary::from_parts(2, rows.clone(), rows).unwrap()
    }

    fn frame(id: u32, points: &[[f32; 2]]) -> Frame {
        Frame::from_parts(
            id,
            1024,
            768,
            points
                .iter()
                .map(|p| (Keypoint::new(1.0, 1.0), Descriptor::Dense(p.to_vec()))),
        )
    }

    fn map_of(frames: Vec<Frame>) -> ViewSequenceMap {
        let poses = frames
            .iter()
            .map(|f| OdometryPose::new(f.frame_id, f.frame_id as f64, 0.0, 0.0))
            .collect();
        ViewSequenceMap {
            kind: DescriptorKind::Dense { dim: 2 },
            frames,
            poses,
            keyframe_ids: vec![],
        }
    }

    #[test]
    fn empty_map_gives_empty_index() {
        let idx = build_index(
            &ViewSequenceMap::empty(DescriptorKind::Dense { dim: 2 }),
            &line_vocab(),
            false,
        )
        .unwrap();
        assert!(idx.is_empty());
        assert!(ExactLocalizer
            .localize(&frame(0, &[[0.0, 0.0]]), &idx, &line_vocab(), 3)
            .is_err());
    }

    #[test]
    fn keyframes_only_indexes_keyframes() {
        let mut m = map_of((0..25).map(|i| frame(i, &[[1.0, 0.0]])).collect());
        m.keyframe_ids = vec![0, 10, 20];
        let idx = build_index(&m, &line_vocab(), true).unwrap();
        assert_eq!(
            idx.frames().iter().map(|f| f.frame_id).collect::<Vec<_>>(),
            vec![0, 10, 20]
        );
    }

    #[test]
    fn nbnn_zero_on_exact_exemplars_and_empty_query() {
        let v = line_vocab();
        let q = frame(0, &[[3.0, 0.0], [7.0, 0.0]]);
        assert_eq!(nbnn_distance(&q, &[3, 7, 9], &v).unwrap(), 0.0);
        assert_eq!(nbnn_distance(&frame(1, &[]), &[1], &v).unwrap(), 0.0);
        assert!(matches!(
            nbnn_distance(&q, &[], &v),
            Err(crate::Error::Retrieval(_))
        ));
        assert!(nbnn_distance(&q, &[10], &v).is_err());
    }

    #[test]
    fn nbnn_is_asymmetric() {
        let v = line_vocab();
        // A: one feature at word 0. B: ten words 0..9.
        let a = frame(0, &[[0.0, 0.0]]);
        let b = frame(1, &(0..10).map(|i| [i as f32, 0.0]).collect::<Vec<_>>());
        let a_to_b = nbnn_distance(&a, &(0..10).collect::<Vec<_>>(), &v).unwrap();
        let b_to_a = nbnn_distance(&b, &[0], &v).unwrap();
        assert_eq!(a_to_b, 0.0);
        assert_eq!(b_to_a, 45.0);
    }

    #[test]
    fn self_retrieval_ranks_first() {
        let v = line_vocab();
        let m = map_of(vec![
            frame(0, &[[0.0, 0.0], [1.0, 0.0]]),
            frame(1, &[[5.0, 0.0], [6.0, 0.0]]),
            frame(2, &[[9.0, 0.0]]),
        ]);
        let idx = build_index(&m, &v, false).unwrap();
        let res = ExactLocalizer.localize(&m.frames[1], &idx, &v, 10).unwrap();
        assert_eq!(res.top().unwrap().frame_id, 1);
        assert_eq!(res.top().unwrap().distance, 0.0);
        assert_eq!(res.len(), 3);
    }

    #[test]
    fn ties_go_to_smaller_frame_id() {
        let v = line_vocab();
        let m = map_of(
            vec![
                frame(4, &[[2.0, 0.0]]),
                frame(2, &[[2.0, 0.0]]),
                frame(7, &[[2.0, 0.0]]),
            ]
            .into_iter()
            .map(|mut f| {
                f.timestamp_index = 0;
                f
            })
            .collect(),
        );
        let idx = BolcfIndex::new(
            m.frames
                .iter()
                .map(|f| IndexedFrame::new(f.frame_id, vec![2]))
                .collect(),
        )
        .unwrap();
        let res = ExactLocalizer
            .localize(&frame(9, &[[0.0, 0.0]]), &idx, &v, 2)
            .unwrap();
        assert_eq!(res.frame_ids().collect::<Vec<_>>(), vec![2, 4]);
    }

    #[test]
    fn bif_round_trip() {
        let idx = BolcfIndex::new(vec![
            IndexedFrame::new(3, vec![5, 1, 1]),
            IndexedFrame::new(1, vec![]),
        ])
        .unwrap();
        let bytes = idx.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"BIF1");
        assert_eq!(BolcfIndex::from_bytes(&bytes).unwrap(), idx);
        assert!(BolcfIndex::from_bytes(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn registry_knows_both_localizers() {
        let r = localizer_registry();
        assert_eq!(r.get("exact").unwrap().name(), "exact");
        assert_eq!(r.get("shortlist").unwrap().name(), "shortlist");
        assert!(r.get("mcl").is_err());
    }
}
