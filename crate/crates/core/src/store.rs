//! The VSF feature store: the on-disk interchange between feature
//! extraction and the pipeline.
//!
//! ```text
//! <store>/manifest.json     version, descriptor_kind, dim | bits, frame_count,
//!                           image_width, image_height
//! <store>/odometry.csv      frame_id,x,y,heading   (one row per frame)
//! <store>/frames/<id>.vsf   "VSF1", u32 count, then per feature
//!                           f32 x, f32 y, descriptor payload
//! <store>/keyframes.txt     optional, one frame id per line
//! <store>/timestamps.csv    optional, frame_id,timestamp_index; absent means
//!                           timestamp_index == frame_id for every frame
//! ```
//!
//! All integers and floats are little-endian. Dense payloads are `dim` f32
//! values; binary payloads are `bits / 8` bytes, most significant bit first.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binio::{put_f32s, put_u32, read_file, to_u32, write_file, ByteReader};
use crate::error::{format_err, validation, Error, Result};
use crate::feature::{
    BinaryCode, Descriptor, DescriptorKind, Frame, Keypoint, LocalFeature, OdometryPose,
    ViewSequenceMap, DEFAULT_IMAGE_HEIGHT, DEFAULT_IMAGE_WIDTH,
};

pub const FRAME_MAGIC: &[u8; 4] = b"VSF1";
pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub descriptor_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    pub frame_count: usize,
    pub image_width: u32,
    pub image_height: u32,
}

impl Manifest {
    pub fn descriptor(&self) -> Result<DescriptorKind> {
        if self.version != STORE_VERSION {
            return Err(format_err(format!(
                "unsupported store version {}",
                self.version
            )));
        }
        match (self.descriptor_kind.as_str(), self.dim, self.bits) {
            ("dense", Some(dim), None) if dim > 0 => Ok(DescriptorKind::Dense { dim }),
            ("binary", None, Some(bits)) if bits > 0 && bits % 8 == 0 => {
                Ok(DescriptorKind::Binary { bits })
            }
            (kind, dim, bits) => Err(format_err(format!(
                "manifest: invalid descriptor spec kind={kind} dim={dim:?} bits={bits:?}"
            ))),
        }
    }

    fn for_map(map: &ViewSequenceMap) -> Result<Self> {
        let (w, h) = match map.frames.first() {
            Some(f) => (f.image_width, f.image_height),
            None => (DEFAULT_IMAGE_WIDTH, DEFAULT_IMAGE_HEIGHT),
        };
        if let Some(f) = map
            .frames
            .iter()
            .find(|f| (f.image_width, f.image_height) != (w, h))
        {
            return Err(validation(format!(
                "frame {} is {}x{} but the store records one size ({w}x{h})",
                f.frame_id, f.image_width, f.image_height
            )));
        }
        let (descriptor_kind, dim, bits) = match map.kind {
            DescriptorKind::Dense { dim } => ("dense", Some(dim), None),
            DescriptorKind::Binary { bits } => ("binary", None, Some(bits)),
        };
        Ok(Self {
            version: STORE_VERSION,
            descriptor_kind: descriptor_kind.into(),
            dim,
            bits,
            frame_count: map.frames.len(),
            image_width: w,
            image_height: h,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseRow {
    frame_id: u32,
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimestampRow {
    frame_id: u32,
    timestamp_index: u64,
}

pub fn frame_path(store: &Path, frame_id: u32) -> PathBuf {
    store.join("frames").join(format!("{frame_id}.vsf"))
}

pub fn read_manifest(store: &Path) -> Result<Manifest> {
    let path = store.join("manifest.json");
    let text = read_file(&path)?;
    serde_json::from_slice(&text).map_err(|e| format_err(format!("{}: {e}", path.display())))
}

/// Serializes one frame's features in VSF layout.
pub fn encode_frame(frame: &Frame, kind: DescriptorKind) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + frame.features.len() * (8 + kind.payload_len()));
    out.extend_from_slice(FRAME_MAGIC);
    put_u32(&mut out, to_u32(frame.features.len(), "feature count")?);
    for f in &frame.features {
        put_f32s(&mut out, &[f.keypoint.x, f.keypoint.y]);
        match (&f.descriptor, kind) {
            (Descriptor::Dense(v), DescriptorKind::Dense { dim }) if v.len() == dim => {
                put_f32s(&mut out, v)
            }
            (Descriptor::Binary(c), DescriptorKind::Binary { bits }) if c.bits() == bits => {
                out.extend_from_slice(c.as_bytes())
            }
            (d, _) => {
                return Err(validation(format!(
                    "frame {} feature {}: {} descriptor in a {kind} store",
                    frame.frame_id,
                    f.feature_id,
                    d.kind()
                )))
            }
        }
    }
    Ok(out)
}

/// Parses a VSF frame file. Feature ids follow file order.
pub fn decode_frame(
    bytes: &[u8],
    frame_id: u32,
    kind: DescriptorKind,
    image_width: u32,
    image_height: u32,
) -> Result<Frame> {
    let what = format!("frame {frame_id}");
    let mut r = ByteReader::new(bytes, &what);
    r.expect_magic(FRAME_MAGIC)?;
    let count = r.u32()? as usize;
    let per_feature = 8 + kind.payload_len();
    if (bytes.len() - 8) != count * per_feature {
        return Err(format_err(format!(
            "frame {frame_id}: {} payload bytes do not hold {count} features of {kind} \
             (dimension mismatch?)",
            bytes.len() - 8
        )));
    }
    let mut features = Vec::with_capacity(count);
    for i in 0..count {
        let x = r.f32()?;
        let y = r.f32()?;
        let descriptor = match kind {
            DescriptorKind::Dense { dim } => Descriptor::Dense(r.f32_vec(dim)?),
            DescriptorKind::Binary { bits } => {
                Descriptor::Binary(BinaryCode::from_bytes(bits, r.take(bits / 8)?.to_vec())?)
            }
        };
        features.push(LocalFeature {
            feature_id: i as u32,
            keypoint: Keypoint::new(x, y),
            descriptor,
        });
    }
    r.finish()?;
    Ok(Frame {
        frame_id,
        timestamp_index: frame_id as u64,
        image_width,
        image_height,
        features,
    })
}

fn frame_ids_on_disk(store: &Path) -> Result<BTreeSet<u32>> {
    let dir = store.join("frames");
    let mut ids = BTreeSet::new();
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ids),
        Err(e) => return Err(Error::io(&dir, e)),
    };
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("vsf") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| format_err(format!("unexpected frame file {}", path.display())))?;
        ids.insert(id);
    }
    Ok(ids)
}

pub fn read_odometry(path: &Path) -> Result<Vec<OdometryPose>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => format_err(format!("{}: {other:?}", path.display())),
    })?;
    expect_header(&mut rdr, path, &["frame_id", "x", "y", "heading"])?;
    let mut poses = Vec::new();
    for row in rdr.deserialize::<PoseRow>() {
        let row = row?;
        poses.push(OdometryPose {
            frame_id: row.frame_id,
            x: row.x,
            y: row.y,
            heading: row.heading,
        });
    }
    Ok(poses)
}

pub fn write_odometry(path: &Path, poses: &[OdometryPose]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in poses {
        w.serialize(PoseRow {
            frame_id: p.frame_id,
            x: p.x,
            y: p.y,
            heading: p.heading,
        })?;
    }
    if poses.is_empty() {
        w.write_record(["frame_id", "x", "y", "heading"])?;
    }
    write_file(path, &finish_csv(w)?)
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| format_err(format!("csv flush: {e}")))
}

pub(crate) fn expect_header<R: std::io::Read>(
    rdr: &mut csv::Reader<R>,
    path: &Path,
    expected: &[&str],
) -> Result<()> {
    let headers = rdr.headers()?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(format_err(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            headers.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

/// Loads and validates a store.
pub fn read_feature_store(path: &Path) -> Result<ViewSequenceMap> {
    let manifest = read_manifest(path)?;
    let kind = manifest.descriptor()?;
    let poses = read_odometry(&path.join("odometry.csv"))?;
    if poses.len() != manifest.frame_count {
        return Err(validation(format!(
            "manifest declares {} frames but odometry has {} poses",
            manifest.frame_count,
            poses.len()
        )));
    }
    let posed: BTreeSet<u32> = poses.iter().map(|p| p.frame_id).collect();
    let on_disk = frame_ids_on_disk(path)?;
    if let Some(id) = on_disk.difference(&posed).next() {
        return Err(validation(format!("missing pose for frame {id}")));
    }
    if let Some(id) = posed.difference(&on_disk).next() {
        return Err(validation(format!("pose for frame {id} has no frame file")));
    }

    let mut frames = Vec::with_capacity(poses.len());
    for p in &poses {
        let fp = frame_path(path, p.frame_id);
        let bytes = read_file(&fp)?;
        frames.push(decode_frame(
            &bytes,
            p.frame_id,
            kind,
            manifest.image_width,
            manifest.image_height,
        )?);
    }

    let ts_path = path.join("timestamps.csv");
    if ts_path.exists() {
        let mut rdr = csv::Reader::from_path(&ts_path)?;
        expect_header(&mut rdr, &ts_path, &["frame_id", "timestamp_index"])?;
        for row in rdr.deserialize::<TimestampRow>() {
            let row = row?;
            let frame = frames
                .iter_mut()
                .find(|f| f.frame_id == row.frame_id)
                .ok_or_else(|| {
                    validation(format!("timestamp for unknown frame {}", row.frame_id))
                })?;
            frame.timestamp_index = row.timestamp_index;
        }
    }

    let kf_path = path.join("keyframes.txt");
    let keyframe_ids = if kf_path.exists() {
        let text = fs::read_to_string(&kf_path).map_err(|e| Error::io(&kf_path, e))?;
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<u32>()
                    .map_err(|_| format_err(format!("keyframes.txt: bad frame id {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let map = ViewSequenceMap {
        kind,
        frames,
        poses,
        keyframe_ids,
    };
    map.validate()?;
    Ok(map)
}

/// Writes a store. Output bytes depend only on the map; stale frame files
/// left in `frames/` from an earlier write are removed.
pub fn write_feature_store(map: &ViewSequenceMap, path: &Path) -> Result<()> {
    map.validate()?;
    let manifest = Manifest::for_map(map)?;
    let frames_dir = path.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;

    let mut json =
        serde_json::to_vec_pretty(&manifest).map_err(|e| format_err(format!("manifest: {e}")))?;
    json.push(b'\n');
    write_file(&path.join("manifest.json"), &json)?;
    write_odometry(&path.join("odometry.csv"), &map.poses)?;

    let wanted: BTreeSet<u32> = map.frame_ids().collect();
    for stale in frame_ids_on_disk(path)?.difference(&wanted) {
        let p = frame_path(path, *stale);
        fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
    }
    for frame in &map.frames {
        write_file(
            &frame_path(path, frame.frame_id),
            &encode_frame(frame, map.kind)?,
        )?;
    }

    let ts_path = path.join("timestamps.csv");
    if map
        .frames
        .iter()
        .any(|f| f.timestamp_index != f.frame_id as u64)
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        for f in &map.frames {
            w.serialize(TimestampRow {
                frame_id: f.frame_id,
                timestamp_index: f.timestamp_index,
            })?;
        }
        write_file(&ts_path, &finish_csv(w)?)?;
    } else if ts_path.exists() {
        fs::remove_file(&ts_path).map_err(|e| Error::io(&ts_path, e))?;
    }

    let kf_path = path.join("keyframes.txt");
    if map.keyframe_ids.is_empty() {
        if kf_path.exists() {
            fs::remove_file(&kf_path).map_err(|e| Error::io(&kf_path, e))?;
        }
    } else {
        let text: String = map.keyframe_ids.iter().map(|k| format!("{k}\n")).collect();
        write_file(&kf_path, text.as_bytes())?;
    }
    Ok(())
}

/// Loads a single frame file, finding the manifest of the store it belongs
/// to (`<store>/frames/<id>.vsf`).
pub fn read_frame_file(path: &Path) -> Result<Frame> {
    let store = path
        .parent()
        .and_then(Path::parent)
        .ok_or_else(|| format_err(format!("{} is not inside a store", path.display())))?;
    let manifest = read_manifest(store)?;
    let kind = manifest.descriptor()?;
    let frame_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| format_err(format!("cannot take a frame id from {}", path.display())))?;
    let frame = decode_frame(
        &read_file(path)?,
        frame_id,
        kind,
        manifest.image_width,
        manifest.image_height,
    )?;
    frame.validate(Some(kind))?;
    Ok(frame)
}
