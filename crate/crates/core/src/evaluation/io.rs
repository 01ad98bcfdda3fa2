use std::path::Path;

use crate::binio::write_file;
use crate::error::Result;
use crate::store::{expect_header, finish_csv};

use super::{GroundTruthBox, PlotPoint, RankReport};

pub const GT_HEADER: [&str; 5] = ["query_frame", "x0", "y0", "x1", "y1"];

pub fn read_gt_boxes(path: &Path) -> Result<Vec<GroundTruthBox>> {
    let mut rdr = csv::Reader::from_path(path)?;
    expect_header(&mut rdr, path, &GT_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let b: GroundTruthBox = row?;
        b.validate()?;
        out.push(b);
    }
    Ok(out)
}

pub fn write_gt_boxes(path: &Path, boxes: &[GroundTruthBox]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(GT_HEADER)?;
    for b in boxes {
        w.serialize(b)?;
    }
    write_file(path, &finish_csv(w)?)
}

pub const REPORT_HEADER: [&str; 8] = [
    "query_frame",
    "x0",
    "y0",
    "x1",
    "y1",
    "best_rank",
    "in_box_features",
    "in_box_ranks",
];

/// One row per box (`best_rank` empty when uncovered, `in_box_ranks`
/// space-separated), then a `summary` row whose `best_rank` is the median
/// over covered boxes and whose `in_box_features` is the merged feature
/// total.
pub fn write_report(path: &Path, report: &RankReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    let opt = |r: Option<usize>| r.map(|v| v.to_string()).unwrap_or_default();
    for b in &report.boxes {
        let ranks: Vec<String> = b.in_box_ranks.iter().map(usize::to_string).collect();
        w.write_record([
            b.gt.query_frame.to_string(),
            b.gt.x0.to_string(),
            b.gt.y0.to_string(),
            b.gt.x1.to_string(),
            b.gt.y1.to_string(),
            opt(b.best_rank),
            b.in_box_ranks.len().to_string(),
            ranks.join(" "),
        ])?;
    }
    w.write_record([
        "summary".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        report
            .median_rank()
            .map(|m| m.to_string())
            .unwrap_or_default(),
        report.total_features.to_string(),
        format!(
            "boxes={} uncovered={}",
            report.boxes.len(),
            report.uncovered()
        ),
    ])?;
    write_file(path, &finish_csv(w)?)
}

pub const PLOT_HEADER: [&str; 3] = ["query_frame", "localization_error", "best_rank"];

pub fn write_plot_data(path: &Path, points: &[PlotPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PLOT_HEADER)?;
    for p in points {
        w.write_record([
            p.query_frame.to_string(),
            p.localization_error.to_string(),
            p.best_rank.to_string(),
        ])?;
    }
    write_file(path, &finish_csv(w)?)
}
