//! Mapping between full frames and the network's working grid, and the
//! train / validation / test split.

use crate::error::{Error, Result};
use crate::imaging::{
    assemble_joint, crop_roi, downsample, rasterize_contour_thick, rescale_pixel_centres,
    ContourPointSet, Dims, Point, Rect, UltrasoundFrame,
};
use crate::numerics::{derive_seed, Matrix, RandomStream};

const SPLIT_STREAM: u64 = 0x5350_4c54;

/// Full-frame size, region of interest and working grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub frame: Dims,
    pub roi: Rect,
    pub work: Dims,
    pub thickness: usize,
}

impl Geometry {
    pub fn new(frame: Dims, roi: Option<Rect>, work: Dims, thickness: usize) -> Result<Self> {
        let roi = roi.unwrap_or(Rect::full(frame));
        if roi.x + roi.width > frame.width || roi.y + roi.height > frame.height {
            return Err(Error::domain(format!("roi does not fit inside a {frame} frame")));
        }
        if roi.width < work.width || roi.height < work.height || work.area() == 0 {
            return Err(Error::domain(format!(
                "roi {}x{} is smaller than the {work} working grid",
                roi.width, roi.height
            )));
        }
        Ok(Self { frame, roi, work, thickness })
    }

    fn roi_dims(&self) -> Dims {
        Dims::new(self.roi.width, self.roi.height)
    }

    pub fn to_work(&self, frame: &UltrasoundFrame) -> Result<UltrasoundFrame> {
        if frame.dims() != self.frame {
            return Err(Error::domain(format!(
                "frame {} is {}, expected {}",
                frame.frame_index(),
                frame.dims(),
                self.frame
            )));
        }
        downsample(&crop_roi(frame, self.roi)?, self.work)
    }

    pub fn contour_to_work(&self, c: &ContourPointSet) -> Result<ContourPointSet> {
        let (dx, dy) = (self.roi.x as f64, self.roi.y as f64);
        let local = shift(c, -dx, -dy)?;
        rescale_pixel_centres(&local, self.roi_dims(), self.work)
    }

    pub fn contour_from_work(&self, c: &ContourPointSet) -> Result<ContourPointSet> {
        let local = rescale_pixel_centres(c, self.work, self.roi_dims())?;
        shift(&local, self.roi.x as f64, self.roi.y as f64)
    }

    /// Joint training vector for a full frame and its full-frame contour.
    pub fn joint_row(&self, frame: &UltrasoundFrame, contour: &ContourPointSet) -> Result<Vec<f64>> {
        let us = self.to_work(frame)?;
        let raster = rasterize_contour_thick(&self.contour_to_work(contour)?, self.work, self.thickness);
        Ok(assemble_joint(&us, &raster.raster)?.into_values())
    }
}

fn shift(c: &ContourPointSet, dx: f64, dy: f64) -> Result<ContourPointSet> {
    ContourPointSet::new(c.points().iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect())
}

/// Joint matrix for the frames at `indices`.
pub fn joint_matrix(
    geometry: &Geometry,
    frames: &[UltrasoundFrame],
    contours: &[ContourPointSet],
    indices: &[usize],
) -> Result<Matrix> {
    let rows = indices
        .iter()
        .map(|&i| geometry.joint_row(&frames[i], &contours[i]))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// The last `test_frames` frames are held out for testing. Of the rest, a
/// seeded random `validation_fraction` (rounded) is held out for validation.
/// Index lists are sorted.
pub fn split_frames(n: usize, test_frames: usize, validation_fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::domain(format!("validation fraction {validation_fraction} outside [0, 1)")));
    }
    if test_frames >= n {
        return Err(Error::domain(format!("{test_frames} test frames leave nothing to train on out of {n}")));
    }
    let pool = n - test_frames;
    let n_val = (pool as f64 * validation_fraction).round() as usize;
    if n_val >= pool {
        return Err(Error::domain("validation split leaves no training frames"));
    }
    let mut order: Vec<usize> = (0..pool).collect();
    RandomStream::new(derive_seed(seed, SPLIT_STREAM)).shuffle(&mut order);
    let mut validation = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    validation.sort_unstable();
    train.sort_unstable();
    Ok(Split {
        train,
        validation,
        test: (pool..n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_partitions_frames() {
        let s = split_frames(2050, 50, 2.0 / 17.0, 42).unwrap();
        assert_eq!(s.test, (2000..2050).collect::<Vec<_>>());
        assert_eq!(s.validation.len(), 235);
        assert_eq!(s.train.len(), 1765);
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..2000).collect::<Vec<_>>());
        assert_eq!(s, split_frames(2050, 50, 2.0 / 17.0, 42).unwrap());
        assert_ne!(s, split_frames(2050, 50, 2.0 / 17.0, 43).unwrap());
    }

    #[test]
    fn split_rejects_degenerate_sizes() {
        assert!(split_frames(50, 50, 0.1, 1).is_err());
        assert!(split_frames(10, 0, 1.0, 1).is_err());
        assert!(split_frames(2, 0, 0.9, 1).is_err());
    }

    #[test]
    fn contour_round_trip_through_work_grid() {
        let g = Geometry::new(
            Dims::new(99, 90),
            Some(Rect { x: 6, y: 3, width: 66, height: 60 }),
            Dims::new(33, 30),
            1,
        )
        .unwrap();
        let c = ContourPointSet::from_pairs(&[(6.5, 3.5), (20.5, 40.5)]).unwrap();
        let w = g.contour_to_work(&c).unwrap();
        assert_eq!(w.points(), &[Point::new(0.0, 0.0), Point::new(7.0, 18.5)]);
        assert_eq!(g.contour_from_work(&w).unwrap(), c);
    }

    #[test]
    fn joint_row_layout() {
        let g = Geometry::new(Dims::new(99, 90), None, Dims::new(33, 30), 1).unwrap();
        let frame = UltrasoundFrame::constant(Dims::new(99, 90), 0.25).unwrap();
        let c = ContourPointSet::from_pairs(&[(1.0, 4.0), (97.0, 88.0)]).unwrap();
        let row = g.joint_row(&frame, &c).unwrap();
        assert_eq!(row.len(), 1981);
        assert!(row[..990].iter().all(|&v| (v - 0.25).abs() < 1e-12));
        assert_eq!(row[990 + 33], 1.0);
        assert_eq!(row[990 + 29 * 33 + 32], 1.0);
        assert_eq!(row[990..1980].iter().sum::<f64>(), 2.0);
        assert_eq!(row[1980], 1.0);
    }

    #[test]
    fn geometry_rejects_bad_roi() {
        assert!(Geometry::new(Dims::new(99, 90), Some(Rect { x: 80, y: 0, width: 33, height: 30 }), Dims::new(33, 30), 1).is_err());
        assert!(Geometry::new(Dims::new(99, 90), Some(Rect { x: 0, y: 0, width: 20, height: 30 }), Dims::new(33, 30), 1).is_err());
    }
}
