use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::frame::Dims;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Ordered contour points, at most one per column, strictly increasing in x.
///
/// An empty set is a valid value that marks a frame whose contour could not
/// be found; consumers skip it instead of scoring it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContourPointSet {
    points: Vec<Point>,
}

impl ContourPointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::domain(format!("contour point {i} is not finite")));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1].x <= w[0].x) {
            return Err(Error::domain(format!(
                "contour x not strictly increasing at point {}",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// A contour is usable for scoring when it has at least one point.
    pub fn is_valid(&self) -> bool {
        !self.points.is_empty()
    }

    /// Row at integer column `x`, if present.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        self.points.iter().find(|p| p.x == x).map(|p| p.y)
    }
}

/// Binary raster, row-major, values in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterContour {
    dims: Dims,
    mask: Vec<u8>,
}

impl RasterContour {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            mask: vec![0; dims.area()],
        }
    }

    pub fn from_mask(dims: Dims, mask: Vec<u8>) -> Result<Self> {
        if mask.len() != dims.area() {
            return Err(Error::domain(format!("mask length {} != {}", mask.len(), dims.area())));
        }
        if mask.iter().any(|&m| m > 1) {
            return Err(Error::domain("mask values must be 0 or 1"));
        }
        Ok(Self { dims, mask })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.mask[y * self.dims.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize) {
        self.mask[y * self.dims.width + x] = 1;
    }

    /// Mask as reals in row-major order.
    pub fn to_values(&self) -> Vec<f64> {
        self.mask.iter().map(|&m| m as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rasterized {
    pub raster: RasterContour,
    /// Points that fell outside the raster and were ignored.
    pub dropped: usize,
}

/// Burns a contour into a 1-px-thick binary raster.
pub fn rasterize_contour(points: &ContourPointSet, dims: Dims) -> Rasterized {
    rasterize_contour_thick(points, dims, 1)
}

/// Burns a contour into a binary raster, `thickness` rows per column.
///
/// Points are snapped to their nearest integer cell. Several points landing in
/// one column are merged by averaging their rows before snapping, so each
/// column carries a single line segment.
pub fn rasterize_contour_thick(points: &ContourPointSet, dims: Dims, thickness: usize) -> Rasterized {
    let mut raster = RasterContour::zeros(dims);
    let mut dropped = 0;
    let mut sums = vec![(0.0f64, 0usize); dims.width];
    for p in points.points() {
        let cx = p.x.round();
        let cy = p.y.round();
        if cx < 0.0 || cy < 0.0 || cx >= dims.width as f64 || cy >= dims.height as f64 {
            dropped += 1;
            continue;
        }
        let s = &mut sums[cx as usize];
        s.0 += p.y;
        s.1 += 1;
    }
    let thickness = thickness.max(1);
    let above = (thickness - 1) / 2;
    for (x, &(sum, n)) in sums.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let centre = (sum / n as f64).round() as usize;
        let top = centre.saturating_sub(above);
        for y in top..(top + thickness).min(dims.height) {
            raster.set(x, y);
        }
    }
    Rasterized { raster, dropped }
}

/// Per occupied column, emits the mean row of its set pixels.
pub fn vectorize_contour(raster: &RasterContour) -> ContourPointSet {
    let d = raster.dims();
    let mut points = Vec::new();
    for x in 0..d.width {
        let (mut sum, mut n) = (0.0, 0usize);
        for y in 0..d.height {
            if raster.get(x, y) == 1 {
                sum += y as f64;
                n += 1;
            }
        }
        if n > 0 {
            points.push(Point::new(x as f64, sum / n as f64));
        }
    }
    ContourPointSet { points }
}

/// Scales coordinates by `to / from` per axis.
pub fn upscale_points(points: &ContourPointSet, from: Dims, to: Dims) -> Result<ContourPointSet> {
    if from.area() == 0 || to.area() == 0 {
        return Err(Error::domain("dimensions must be positive"));
    }
    let sx = to.width as f64 / from.width as f64;
    let sy = to.height as f64 / from.height as f64;
    let pts = points
        .points()
        .iter()
        .map(|p| Point::new(p.x * sx, p.y * sy))
        .collect();
    Ok(ContourPointSet { points: pts })
}

/// Maps pixel-index coordinates between grids so that pixel centres line up:
/// index `i` on `from` is the centre `i + 0.5` of a unit cell, scaled and
/// shifted back by half a cell on `to`.
pub fn rescale_pixel_centres(points: &ContourPointSet, from: Dims, to: Dims) -> Result<ContourPointSet> {
    let shifted = ContourPointSet {
        points: points
            .points()
            .iter()
            .map(|p| Point::new(p.x + 0.5, p.y + 0.5))
            .collect(),
    };
    let scaled = upscale_points(&shifted, from, to)?;
    Ok(ContourPointSet {
        points: scaled
            .points()
            .iter()
            .map(|p| Point::new(p.x - 0.5, p.y - 0.5))
            .collect(),
    })
}

/// Serializes a contour as `x<TAB>y` lines.
pub fn format_contour(points: &ContourPointSet, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    if points.is_empty() {
        out.push_str("# empty\n");
    }
    for p in points.points() {
        let _ = writeln!(out, "{}\t{}", p.x, p.y);
    }
    out
}

pub fn parse_contour(text: &str) -> Result<ContourPointSet> {
    let mut points = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            let mut fields = trimmed.split('\t');
            let parsed = (fields.next(), fields.next(), fields.next());
            let point = match parsed {
                (Some(x), Some(y), None) => x
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .zip(y.trim().parse::<f64>().ok()),
                _ => None,
            };
            match point {
                Some((x, y)) => points.push(Point::new(x, y)),
                None => {
                    return Err(Error::Parse {
                        what: "contour",
                        offset,
                        msg: format!("expected `x<TAB>y`, got {trimmed:?}"),
                    })
                }
            }
        }
        offset += line.len();
    }
    ContourPointSet::new(points)
}

pub fn write_contour(path: impl AsRef<Path>, points: &ContourPointSet, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_contour(points, comment)).map_err(|e| Error::io(path, e))
}

pub fn read_contour(path: impl AsRef<Path>) -> Result<ContourPointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_contour(&text)
}

/// File name `<stem>_%05d.contour`.
pub fn contour_file_name(stem: &str, frame_index: usize) -> String {
    format!("{stem}_{frame_index:05}.contour")
}

/// Recovers the frame index from a `<stem>_%05d.<ext>` file name.
pub fn frame_index_from_name(name: &str) -> Option<usize> {
    let base = name.rsplit_once('.').map_or(name, |(b, _)| b);
    let (_, digits) = base.rsplit_once('_')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(pairs: &[(f64, f64)]) -> ContourPointSet {
        ContourPointSet::from_pairs(pairs).unwrap()
    }

    #[test]
    fn point_set_requires_increasing_x() {
        assert!(ContourPointSet::from_pairs(&[(1.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(ContourPointSet::from_pairs(&[(2.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(ContourPointSet::from_pairs(&[(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn rasterize_empty() {
        let r = rasterize_contour(&ContourPointSet::empty(), Dims::new(4, 3));
        assert!(r.raster.mask().iter().all(|&m| m == 0));
        assert_eq!(r.dropped, 0);
    }

    #[test]
    fn rasterize_diagonal() {
        let r = rasterize_contour(&set(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), Dims::new(3, 3));
        assert_eq!(r.raster.mask(), &[1, 0, 0, 0, 1, 0, 0, 0, 1]);
    }

    #[test]
    fn rasterize_drops_out_of_range() {
        let r = rasterize_contour(&set(&[(-1.0, 0.0), (1.0, 5.0), (2.0, 1.0)]), Dims::new(3, 3));
        assert_eq!(r.dropped, 2);
        assert_eq!(r.raster.mask().iter().filter(|&&m| m == 1).count(), 1);
    }

    #[test]
    fn rasterize_merges_points_in_one_column() {
        let r = rasterize_contour(&set(&[(0.8, 1.0), (1.2, 3.0)]), Dims::new(3, 5));
        assert_eq!(r.raster.get(1, 2), 1);
        assert_eq!(r.raster.mask().iter().filter(|&&m| m == 1).count(), 1);
    }

    #[test]
    fn rasterize_thickness() {
        let r = rasterize_contour_thick(&set(&[(0.0, 2.0)]), Dims::new(1, 5), 3);
        assert_eq!(r.raster.mask(), &[0, 1, 1, 1, 0]);
        assert_eq!(vectorize_contour(&r.raster).points()[0].y, 2.0);
    }

    #[test]
    fn vectorize_diagonal() {
        let raster = RasterContour::from_mask(Dims::new(3, 3), vec![1, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
        assert_eq!(vectorize_contour(&raster), set(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]));
    }

    #[test]
    fn vectorize_column_centroid() {
        let mut raster = RasterContour::zeros(Dims::new(2, 8));
        raster.set(1, 4);
        raster.set(1, 6);
        assert_eq!(vectorize_contour(&raster), set(&[(1.0, 5.0)]));
    }

    #[test]
    fn vectorize_all_zero_is_invalid() {
        let v = vectorize_contour(&RasterContour::zeros(Dims::new(5, 5)));
        assert!(v.is_empty());
        assert!(!v.is_valid());
    }

    #[test]
    fn upscale_examples() {
        let p = set(&[(16.5, 15.0), (20.0, 3.0)]);
        let same = upscale_points(&p, Dims::new(33, 30), Dims::new(33, 30)).unwrap();
        assert_eq!(same, p);
        let up = upscale_points(&set(&[(16.5, 15.0)]), Dims::new(33, 30), Dims::new(330, 300)).unwrap();
        assert_eq!(up.points()[0], Point::new(165.0, 150.0));
    }

    #[test]
    fn pixel_centre_rescale() {
        let p = set(&[(0.0, 0.0), (32.0, 29.0)]);
        let up = rescale_pixel_centres(&p, Dims::new(33, 30), Dims::new(99, 90)).unwrap();
        assert_eq!(up.points()[0], Point::new(1.0, 1.0));
        assert_eq!(up.points()[1], Point::new(97.0, 88.0));
    }

    #[test]
    fn contour_text_format() {
        let p = set(&[(0.0, 1.5), (3.0, 2.25)]);
        let text = format_contour(&p, Some("truth"));
        assert_eq!(text, "# truth\n0\t1.5\n3\t2.25\n");
        assert_eq!(parse_contour(&text).unwrap(), p);
        assert!(parse_contour("1 2\n").is_err());
        assert!(parse_contour(&format_contour(&ContourPointSet::empty(), None)).unwrap().is_empty());
    }

    #[test]
    fn frame_index_names() {
        assert_eq!(contour_file_name("us", 42), "us_00042.contour");
        assert_eq!(frame_index_from_name("us_00042.contour"), Some(42));
        assert_eq!(frame_index_from_name("a_b_00007.pgm"), Some(7));
        assert_eq!(frame_index_from_name("nothing.contour"), None);
    }

    proptest! {
        #[test]
        fn rasterize_vectorize_within_half_pixel(ys in proptest::collection::vec(0.0f64..29.49, 1..33)) {
            let pts: Vec<Point> = ys.iter().enumerate().map(|(x, &y)| Point::new(x as f64, y)).collect();
            let contour = ContourPointSet::new(pts).unwrap();
            let r = rasterize_contour(&contour, Dims::new(33, 30));
            prop_assert_eq!(r.dropped, 0);
            for x in 0..33 {
                prop_assert!((0..30).filter(|&y| r.raster.get(x, y) == 1).count() <= 1);
            }
            let back = vectorize_contour(&r.raster);
            prop_assert_eq!(back.len(), contour.len());
            for (a, b) in back.points().iter().zip(contour.points()) {
                prop_assert_eq!(a.x, b.x);
                prop_assert!((a.y - b.y).abs() <= 0.5);
            }
        }

        #[test]
        fn upscale_then_downscale(xs in proptest::collection::vec(0.0f64..1.0, 1..20), w in 1usize..200, h in 1usize..200) {
            let pts: Vec<Point> = xs.iter().enumerate().map(|(i, &y)| Point::new(i as f64 + y, y * 10.0)).collect();
            let c = ContourPointSet::new(pts).unwrap();
            let from = Dims::new(33, 30);
            let to = Dims::new(w, h);
            let back = upscale_points(&upscale_points(&c, from, to).unwrap(), to, from).unwrap();
            for (a, b) in back.points().iter().zip(c.points()) {
                prop_assert!((a.x - b.x).abs() <= 1e-12 && (a.y - b.y).abs() <= 1e-12);
            }
        }
    }
}
