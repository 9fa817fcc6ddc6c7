//! Dataset indexing, face-crop extraction, and per-video frame spans.
//!
//! Frames arrive as image files plus optional precomputed facial landmarks;
//! no face detector runs here. The index is a CSV with columns
//! `video_id,frame_idx,image_path,label,landmarks_path` (last one optional),
//! or, as a fallback, a `real/` + `fake/` directory pair of PNG frames.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{load_png, Image};

/// Binary frame label; fake scores high by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Real => 0,
            Label::Fake => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Real),
            1 => Some(Label::Fake),
            _ => None,
        }
    }

    pub fn as_f32(self) -> f32 {
        f32::from(self.as_u8())
    }
}

/// One indexed frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub video_id: String,
    pub frame_idx: u32,
    pub image_path: PathBuf,
    pub label: Label,
    pub landmarks_path: Option<PathBuf>,
}

/// Validated dataset index; `(video_id, frame_idx)` pairs are unique.
#[derive(Debug, Clone)]
pub struct DatasetIndex {
    root: PathBuf,
    entries: Vec<IndexEntry>,
    dropped: usize,
}

impl DatasetIndex {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Rows dropped during ingestion because their image file was missing.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Absolute path for an entry's image file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Distinct video ids in first-appearance order.
    pub fn video_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for e in &self.entries {
            if seen.insert(e.video_id.clone()) {
                out.push(e.video_id.clone());
            }
        }
        out
    }

    /// Entries of one video sorted by frame index.
    pub fn frames_of(&self, video_id: &str) -> Vec<&IndexEntry> {
        let mut frames: Vec<&IndexEntry> =
            self.entries.iter().filter(|e| e.video_id == video_id).collect();
        frames.sort_by_key(|e| e.frame_idx);
        frames
    }

    /// Restrict the index to a set of video ids.
    pub fn subset(&self, keep: &HashSet<String>) -> DatasetIndex {
        DatasetIndex {
            root: self.root.clone(),
            entries: self.entries.iter().filter(|e| keep.contains(&e.video_id)).cloned().collect(),
            dropped: 0,
        }
    }

    pub fn has_both_labels(&self) -> bool {
        let mut real = false;
        let mut fake = false;
        for e in &self.entries {
            match e.label {
                Label::Real => real = true,
                Label::Fake => fake = true,
            }
        }
        real && fake
    }
}

/// A square face crop with its provenance.
#[derive(Debug, Clone)]
pub struct FaceCrop {
    pub image: Image,
    pub video_id: String,
    pub frame_idx: u32,
    pub label: Label,
}

/// Frames sampled from one video; `shortfall` marks videos shorter than the span.
#[derive(Debug, Clone)]
pub struct SampledSpan {
    pub crops: Vec<FaceCrop>,
    pub shortfall: bool,
}

pub const INDEX_FILE: &str = "index.csv";
pub const DEFAULT_SPAN: usize = 16;
const LANDMARK_MARGIN: f64 = 1.3;

/// Ingest a dataset root: `index.csv` if present, else a `real/` + `fake/`
/// directory pair. Rows whose image file is missing are dropped and counted.
pub fn ingest_index(root: &Path) -> Result<DatasetIndex> {
    let csv_path = root.join(INDEX_FILE);
    let (entries, dropped) = if csv_path.is_file() {
        ingest_csv(root, &csv_path)?
    } else if root.join("real").is_dir() && root.join("fake").is_dir() {
        ingest_dir_pair(root)?
    } else {
        return Err(Error::MalformedIndex(format!(
            "{} has neither {INDEX_FILE} nor real/ + fake/ directories",
            root.display()
        )));
    };
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    let mut keys = HashSet::new();
    for e in &entries {
        if !keys.insert((e.video_id.clone(), e.frame_idx)) {
            return Err(Error::MalformedIndex(format!(
                "duplicate (video_id, frame_idx) = ({}, {})",
                e.video_id, e.frame_idx
            )));
        }
    }
    Ok(DatasetIndex { root: root.to_path_buf(), entries, dropped })
}

fn ingest_csv(root: &Path, csv_path: &Path) -> Result<(Vec<IndexEntry>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(csv_path)?;
    let mut entries = Vec::new();
    let mut dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 4 {
            return Err(Error::MalformedIndex(format!(
                "row {} has {} fields, expected at least 4",
                line + 2,
                record.len()
            )));
        }
        let video_id = record[0].trim().to_string();
        let frame_idx: u32 = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::MalformedIndex(format!("bad frame_idx {:?}", &record[1])))?;
        let image_path = PathBuf::from(record[2].trim());
        let label = record[3]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| Error::MalformedIndex(format!("bad label {:?}", &record[3])))?;
        let landmarks_path = record
            .get(4)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from);
        let abs = if image_path.is_absolute() { image_path.clone() } else { root.join(&image_path) };
        if !abs.is_file() {
            dropped += 1;
            continue;
        }
        entries.push(IndexEntry { video_id, frame_idx, image_path, label, landmarks_path });
    }
    Ok((entries, dropped))
}

fn ingest_dir_pair(root: &Path) -> Result<(Vec<IndexEntry>, usize)> {
    let mut entries = Vec::new();
    for (dir, label) in [("real", Label::Real), ("fake", Label::Fake)] {
        let mut files: Vec<PathBuf> = std::fs::read_dir(root.join(dir))
            .map_err(Error::io_at(root.join(dir)))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for path in files {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::MalformedIndex(format!("unusable filename {}", path.display())))?
                .to_string();
            let rel = path.strip_prefix(root).unwrap_or(&path).to_path_buf();
            entries.push(IndexEntry {
                video_id: stem,
                frame_idx: 0,
                image_path: rel,
                label,
                landmarks_path: None,
            });
        }
    }
    Ok((entries, 0))
}

/// Axis-aligned crop box `(y0, x0, y1, x1)` in continuous pixel coordinates.
pub type CropBox = (f64, f64, f64, f64);

/// Landmark bounding box expanded by `margin` about its center, clipped to
/// the frame. Half-extents below half a pixel are widened to avoid a
/// degenerate box.
pub fn landmark_crop_box(
    landmarks: &[(f64, f64)],
    margin: f64,
    height: usize,
    width: usize,
) -> Result<CropBox> {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in landmarks {
        if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
            return Err(Error::LandmarkOutOfBounds { x, y, width, height });
        }
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;
    let hx = ((max_x - min_x) / 2.0 * margin).max(0.5);
    let hy = ((max_y - min_y) / 2.0 * margin).max(0.5);
    Ok((
        (cy - hy).max(0.0),
        (cx - hx).max(0.0),
        (cy + hy).min(height as f64),
        (cx + hx).min(width as f64),
    ))
}

/// Resample a continuous box region to a `crop x crop` square, bilinear.
fn crop_resample(frame: &Image, b: CropBox, crop: usize) -> Image {
    let (y0, x0, y1, x1) = b;
    let sy = (y1 - y0) / crop as f64;
    let sx = (x1 - x0) / crop as f64;
    Image::from_fn(crop, crop, |y, x| {
        let src_y = y0 + (y as f64 + 0.5) * sy - 0.5;
        let src_x = x0 + (x as f64 + 0.5) * sx - 0.5;
        [
            frame.sample_bilinear(src_y, src_x, 0),
            frame.sample_bilinear(src_y, src_x, 1),
            frame.sample_bilinear(src_y, src_x, 2),
        ]
    })
}

/// Extract a square `crop_size` face crop.
///
/// With landmarks: their bounding box expanded by the 1.3 margin factor,
/// clipped, and resized. Without: the largest centered square. Deterministic
/// for identical inputs.
pub fn crop_face(frame: &Image, landmarks: Option<&[(f64, f64)]>, crop_size: usize) -> Result<Image> {
    if frame.height() < 8 || frame.width() < 8 {
        return Err(Error::InvalidParams(format!(
            "frame {}x{} below the 8x8 minimum",
            frame.height(),
            frame.width()
        )));
    }
    if crop_size == 0 {
        return Err(Error::InvalidParams("crop_size must be positive".into()));
    }
    let b = match landmarks {
        Some(pts) if !pts.is_empty() => {
            landmark_crop_box(pts, LANDMARK_MARGIN, frame.height(), frame.width())?
        }
        _ => {
            let side = frame.height().min(frame.width()) as f64;
            let y0 = (frame.height() as f64 - side) / 2.0;
            let x0 = (frame.width() as f64 - side) / 2.0;
            (y0, x0, y0 + side, x0 + side)
        }
    };
    Ok(crop_resample(frame, b, crop_size))
}

/// Parse a landmarks file: one `x y` pair per line, pixel units.
pub fn load_landmarks(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(Error::io_at(path))?;
    let mut pts = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedIndex(format!("{}:{}: bad landmark line", path.display(), ln + 1)))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedIndex(format!("{}:{}: bad landmark line", path.display(), ln + 1)))?;
        pts.push((x, y));
    }
    Ok(pts)
}

/// Load and crop one indexed frame.
pub fn load_crop(index: &DatasetIndex, entry: &IndexEntry, crop_size: usize) -> Result<FaceCrop> {
    let frame = load_png(&index.resolve(&entry.image_path))?;
    let landmarks = match &entry.landmarks_path {
        Some(p) => Some(load_landmarks(&index.resolve(p))?),
        None => None,
    };
    let image = crop_face(&frame, landmarks.as_deref(), crop_size)?;
    Ok(FaceCrop {
        image,
        video_id: entry.video_id.clone(),
        frame_idx: entry.frame_idx,
        label: entry.label,
    })
}

/// First `span` consecutive frames of a video (by frame index, from `offset`),
/// cropped to `crop_size`. Shorter videos yield all frames plus the shortfall flag.
pub fn sample_frames_at(
    index: &DatasetIndex,
    video_id: &str,
    span: usize,
    offset: usize,
    crop_size: usize,
) -> Result<SampledSpan> {
    let frames = index.frames_of(video_id);
    if frames.is_empty() {
        return Err(Error::UnknownVideo(video_id.to_string()));
    }
    let window: Vec<_> = frames.into_iter().skip(offset).take(span).collect();
    let shortfall = window.len() < span;
    let crops = window
        .into_iter()
        .map(|e| load_crop(index, e, crop_size))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSpan { crops, shortfall })
}

/// [`sample_frames_at`] from the first available frame.
pub fn sample_frames(
    index: &DatasetIndex,
    video_id: &str,
    span: usize,
    crop_size: usize,
) -> Result<SampledSpan> {
    sample_frames_at(index, video_id, span, 0, crop_size)
}

/// Deterministic per-class video split: sorted video ids per class are dealt
/// into train / val / test by the given fractions (each class keeps at least
/// one training video; val and test get at least one when their fraction > 0).
#[derive(Debug, Clone)]
pub struct VideoSplit {
    pub train: HashSet<String>,
    pub val: HashSet<String>,
    pub test: HashSet<String>,
}

pub fn split_videos(index: &DatasetIndex, val_fraction: f64, test_fraction: f64) -> VideoSplit {
    let mut by_class: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for e in index.entries() {
        if seen.insert(e.video_id.clone()) {
            by_class.entry(e.label.as_u8()).or_default().push(e.video_id.clone());
        }
    }
    let mut split = VideoSplit { train: HashSet::new(), val: HashSet::new(), test: HashSet::new() };
    for (_, mut vids) in by_class {
        vids.sort();
        let n = vids.len();
        let mut n_val = if val_fraction > 0.0 { ((n as f64 * val_fraction).round() as usize).max(1) } else { 0 };
        let mut n_test = if test_fraction > 0.0 { ((n as f64 * test_fraction).round() as usize).max(1) } else { 0 };
        while n_val + n_test + 1 > n && n_test > 0 {
            n_test -= 1;
        }
        while n_val + n_test + 1 > n && n_val > 0 {
            n_val -= 1;
        }
        let n_train = n - n_val - n_test;
        for (i, v) in vids.into_iter().enumerate() {
            if i < n_train {
                split.train.insert(v);
            } else if i < n_train + n_val {
                split.val.insert(v);
            } else {
                split.test.insert(v);
            }
        }
    }
    split
}
