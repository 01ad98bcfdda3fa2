use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binio::write_file;
use crate::error::{validation, Error, Result};
use crate::feature::Keypoint;
use crate::store::{expect_header, finish_csv};

/// A feature followed across frames. Frame ids strictly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub points: Vec<(u32, Keypoint)>,
}

impl Track {
    pub fn new(track_id: u32, points: Vec<(u32, Keypoint)>) -> Result<Self> {
        let t = Self { track_id, points };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(validation(format!(
                "track {} has {} points, needs at least 2",
                self.track_id,
                self.points.len()
            )));
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(validation(format!(
                "track {}: frame ids not strictly increasing",
                self.track_id
            )));
        }
        if self
            .points
            .iter()
            .any(|(_, k)| !(k.x.is_finite() && k.y.is_finite()))
        {
            return Err(validation(format!(
                "track {}: non-finite position",
                self.track_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrackRow {
    track_id: u32,
    frame_id: u32,
    x: f32,
    y: f32,
}

pub const TRACKS_HEADER: [&str; 4] = ["track_id", "frame_id", "x", "y"];

/// Reads `track_id,frame_id,x,y`. Rows of one track may interleave with
/// others but must be in frame order.
pub fn read_tracks(path: &Path) -> Result<Vec<Track>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    })?;
    expect_header(&mut rdr, path, &TRACKS_HEADER)?;
    let mut grouped: BTreeMap<u32, Vec<(u32, Keypoint)>> = BTreeMap::new();
    for row in rdr.deserialize::<TrackRow>() {
        let row = row?;
        grouped
            .entry(row.track_id)
            .or_default()
            .push((row.frame_id, Keypoint::new(row.x, row.y)));
    }
    grouped
        .into_iter()
        .map(|(id, points)| Track::new(id, points))
        .collect()
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACKS_HEADER)?;
    for t in tracks {
        for (frame_id, k) in &t.points {
            w.write_record(&[
                t.track_id.to_string(),
                frame_id.to_string(),
                k.x.to_string(),
                k.y.to_string(),
            ])?;
        }
    }
    write_file(path, &finish_csv(w)?)
}
