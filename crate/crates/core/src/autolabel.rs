//! Automatic reference labelling.
//!
//! Columns are scanned left to right. In each column every white pixel
//! directly followed (downwards) by a black pixel is a candidate. One candidate
//! per column is kept: the one matching the previous frame's contour when
//! possible, otherwise the one closest to the recently selected rows on the
//! left.

use crate::error::{Error, Result};
use crate::imaging::{ContourPointSet, Point, UltrasoundFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelConfig {
    /// Intensities at or above this are white.
    pub binarize_threshold: f64,
    /// Vertical match window against the previous frame's contour, px.
    pub neighbor_radius: usize,
    /// Number of already-selected columns consulted by the fallback rule.
    pub column_window: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            binarize_threshold: 0.5,
            neighbor_radius: 3,
            column_window: 5,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(Error::domain(format!(
                "binarize_threshold {} outside [0, 1]",
                self.binarize_threshold
            )));
        }
        if self.column_window == 0 {
            return Err(Error::domain("column_window must be at least 1"));
        }
        Ok(())
    }
}

/// Rows `r` where pixel `r` is white and pixel `r + 1` is black, top to bottom.
pub fn detect_candidates(column: &[f64], threshold: f64) -> Vec<usize> {
    column
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] >= threshold && w[1] < threshold)
        .map(|(r, _)| r)
        .collect()
}

fn nearest(candidates: &[usize], target: f64) -> Option<usize> {
    // candidates ascend, so strict `<` keeps the smaller row on ties
    let mut best: Option<(usize, f64)> = None;
    for &c in candidates {
        let d = (c as f64 - target).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    best.map(|(c, _)| c)
}

fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Which rule picked a column's point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Matched the previous frame's point within the radius.
    Tracked(usize),
    /// Closest to the recent selections in this frame (or the default row).
    Fallback(usize),
}

impl Selection {
    pub fn row(self) -> usize {
        match self {
            Selection::Tracked(r) | Selection::Fallback(r) => r,
        }
    }
}

/// Chooses one candidate for a column.
///
/// `left_neighbors` holds the rows already selected in this frame, oldest
/// first; the last `column_window` of them are consulted. When it is empty the
/// fallback aims at `default_row`.
pub fn select_point(
    candidates: &[usize],
    prev_point: Option<f64>,
    left_neighbors: &[usize],
    default_row: f64,
    cfg: &LabelConfig,
) -> Option<Selection> {
    if candidates.is_empty() {
        return None;
    }
    if let Some(prev) = prev_point {
        let radius = cfg.neighbor_radius as f64;
        let close: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&c| (c as f64 - prev).abs() <= radius)
            .collect();
        if let Some(c) = nearest(&close, prev) {
            return Some(Selection::Tracked(c));
        }
    }
    let recent = &left_neighbors[left_neighbors.len().saturating_sub(cfg.column_window)..];
    let target = if recent.is_empty() {
        default_row
    } else {
        median(recent)
    };
    nearest(candidates, target).map(Selection::Fallback)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel {
    pub frame_index: usize,
    pub contour: ContourPointSet,
    pub columns_filled: usize,
    pub fallback_count: usize,
}

impl FrameLabel {
    pub fn coverage(&self, width: usize) -> f64 {
        self.columns_filled as f64 / width as f64
    }
}

/// Labels one frame given the previous frame's contour, if any.
pub fn label_frame(
    frame: &UltrasoundFrame,
    previous: Option<&ContourPointSet>,
    cfg: &LabelConfig,
) -> FrameLabel {
    let width = frame.width();
    let default_row = (frame.height() as f64 - 1.0) / 2.0;
    // previous rows indexed by column
    let mut prev_rows = vec![None; width];
    if let Some(prev) = previous {
        for p in prev.points() {
            let x = p.x.round();
            if x >= 0.0 && (x as usize) < width {
                prev_rows[x as usize] = Some(p.y);
            }
        }
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut points = Vec::new();
    let mut fallback_count = 0;
    for (x, prev) in prev_rows.iter().enumerate() {
        let candidates = detect_candidates(&frame.column(x), cfg.binarize_threshold);
        if let Some(choice) = select_point(&candidates, *prev, &selected, default_row, cfg) {
            if matches!(choice, Selection::Fallback(_)) {
                fallback_count += 1;
            }
            selected.push(choice.row());
            points.push(Point::new(x as f64, choice.row() as f64));
        }
    }
    let columns_filled = points.len();
    FrameLabel {
        frame_index: frame.frame_index(),
        contour: ContourPointSet::new(points).expect("columns ascend"),
        columns_filled,
        fallback_count,
    }
}

/// Labels a sequence in frame order; frame `t` is matched against `t - 1`.
pub fn label_sequence(frames: &[UltrasoundFrame], cfg: &LabelConfig) -> Result<Vec<FrameLabel>> {
    cfg.validate()?;
    let first = frames
        .first()
        .ok_or_else(|| Error::domain("cannot label an empty sequence"))?;
    if let Some(f) = frames.iter().find(|f| f.dims() != first.dims()) {
        return Err(Error::domain(format!(
            "frame {} is {}, expected {}",
            f.frame_index(),
            f.dims(),
            first.dims()
        )));
    }
    let mut out: Vec<FrameLabel> = Vec::with_capacity(frames.len());
    for frame in frames {
        let label = label_frame(frame, out.last().map(|l| &l.contour), cfg);
        out.push(label);
    }
    Ok(out)
}

/// Coverage table: `frame_index,columns_filled,fallback_count`.
pub fn coverage_csv(labels: &[FrameLabel]) -> String {
    let mut out = String::from("frame_index,columns_filled,fallback_count\n");
    for l in labels {
        out.push_str(&format!("{},{},{}\n", l.frame_index, l.columns_filled, l.fallback_count));
    }
    out
}
