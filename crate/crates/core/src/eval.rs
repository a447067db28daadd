//! Mean Sum of Distances between contours and the comparison report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{frame_index_from_name, read_contour, ContourPointSet, Point};

#[inline]
fn l1(a: &Point, b: &Point) -> f64 {
    (a.x - b.x).abs() + (a.y - b.y).abs()
}

fn nearest_sum(from: &[Point], to: &[Point]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| l1(p, q)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Mean Sum of Distances in pixels: every point of either contour contributes
/// its L1 distance to the nearest point of the other, and the total is divided
/// by the combined point count.
pub fn msd(u: &ContourPointSet, v: &ContourPointSet) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::domain("msd of an empty contour"));
    }
    let (u, v) = (u.points(), v.points());
    let total = nearest_sum(v, u) + nearest_sum(u, v);
    Ok(total / (u.len() + v.len()) as f64)
}

pub fn px_to_mm(value_px: f64, mm_per_px: f64) -> Result<f64> {
    if !(mm_per_px > 0.0) {
        return Err(Error::domain(format!("mm_per_px must be positive, got {mm_per_px}")));
    }
    Ok(value_px * mm_per_px)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsdResult {
    pub value_px: f64,
    pub value_mm: f64,
    pub mm_per_px: f64,
    pub n_points_u: usize,
    pub n_points_v: usize,
}

pub fn msd_calibrated(u: &ContourPointSet, v: &ContourPointSet, mm_per_px: f64) -> Result<MsdResult> {
    let value_px = msd(u, v)?;
    Ok(MsdResult {
        value_px,
        value_mm: px_to_mm(value_px, mm_per_px)?,
        mm_per_px,
        n_points_u: u.len(),
        n_points_v: v.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScore {
    pub frame: usize,
    pub msd: MsdResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub label: String,
    pub frames: Vec<FrameScore>,
    /// Frames present on either side but skipped because a contour was
    /// missing or empty.
    pub excluded: usize,
}

impl PairReport {
    pub fn average_px(&self) -> f64 {
        self.frames.iter().map(|f| f.msd.value_px).sum::<f64>() / self.frames.len() as f64
    }

    pub fn average_mm(&self) -> f64 {
        self.frames.iter().map(|f| f.msd.value_mm).sum::<f64>() / self.frames.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub mm_per_px: f64,
    pub pairs: Vec<PairReport>,
}

impl ComparisonReport {
    pub fn pair(&self, label: &str) -> Option<&PairReport> {
        self.pairs.iter().find(|p| p.label == label)
    }

    /// `pair,frame,msd_px,msd_mm` rows followed by one `pair,AVERAGE,,mm`
    /// summary row per pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,frame,msd_px,msd_mm\n");
        for p in &self.pairs {
            for f in &p.frames {
                let _ = writeln!(out, "{},{},{},{}", p.label, f.frame, f.msd.value_px, f.msd.value_mm);
            }
        }
        for p in &self.pairs {
            let _ = writeln!(out, "{},AVERAGE,,{}", p.label, p.average_mm());
        }
        out
    }
}

/// Index-aligned contours for one source (Truth, Ref, DL, Hand, ...).
pub type ContourSet = BTreeMap<usize, ContourPointSet>;

/// Scores one pair of sources over the frames in `frames` (all shared frames
/// when `None`).
pub fn compare_sets(
    label: &str,
    a: &ContourSet,
    b: &ContourSet,
    frames: Option<&[usize]>,
    mm_per_px: f64,
) -> Result<PairReport> {
    let indices: Vec<usize> = match frames {
        Some(f) => f.to_vec(),
        None => {
            let mut all: Vec<usize> = a.keys().chain(b.keys()).copied().collect();
            all.sort_unstable();
            all.dedup();
            all
        }
    };
    let mut scores = Vec::new();
    let mut excluded = 0;
    for idx in indices {
        match (a.get(&idx), b.get(&idx)) {
            (Some(u), Some(v)) if u.is_valid() && v.is_valid() => scores.push(FrameScore {
                frame: idx,
                msd: msd_calibrated(u, v, mm_per_px)?,
            }),
            _ => excluded += 1,
        }
    }
    if scores.is_empty() {
        return Err(Error::domain(format!("pair {label:?} has no aligned valid frames")));
    }
    Ok(PairReport {
        label: label.to_string(),
        frames: scores,
        excluded,
    })
}

/// Reads every `*.contour` file of `dir`, keyed by its frame index.
pub fn load_contour_dir(dir: impl AsRef<Path>) -> Result<ContourSet> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingArtifact(dir.to_path_buf()));
    }
    let mut out = ContourSet::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.ends_with(".contour") {
            continue;
        }
        if let Some(idx) = frame_index_from_name(&name) {
            out.insert(idx, read_contour(entry.path())?);
        }
    }
    Ok(out)
}

/// One row of a comparison: a label and the two contour directories.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub label: String,
    pub dir_a: std::path::PathBuf,
    pub dir_b: std::path::PathBuf,
}

pub fn compare(specs: &[PairSpec], frames: Option<&[usize]>, mm_per_px: f64) -> Result<ComparisonReport> {
    px_to_mm(0.0, mm_per_px)?;
    let mut pairs = Vec::with_capacity(specs.len());
    for s in specs {
        let a = load_contour_dir(&s.dir_a)?;
        let b = load_contour_dir(&s.dir_b)?;
        pairs.push(compare_sets(&s.label, &a, &b, frames, mm_per_px)?);
    }
    Ok(ComparisonReport { mm_per_px, pairs })
}
