//! Frame ingestion, cropping, downsampling to the working grid, contour
//! raster/point conversions and joint example assembly.
//!
//! Every raster is flattened row-major, row 0 first. The joint vector layout
//! is `[ultrasound (w*h) | contour (w*h) | 1.0]`.

mod contour;
mod frame;
mod pgm;

pub use contour::{
    contour_file_name, format_contour, frame_index_from_name, parse_contour, rasterize_contour,
    rasterize_contour_thick, read_contour, rescale_pixel_centres, upscale_points, vectorize_contour,
    write_contour, ContourPointSet, Point, RasterContour, Rasterized,
};
pub use frame::{crop_roi, downsample, Dims, Rect, UltrasoundFrame, DEFAULT_MM_PER_PX};
pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm};

use crate::error::{Error, Result};

/// Working grid of the network: 33 columns by 30 rows.
pub const WORK_DIMS: Dims = Dims::new(33, 30);

/// Length of a joint example on the default working grid.
pub const JOINT_LEN: usize = 2 * WORK_DIMS.area() + 1;

/// Length of a joint vector on a `dims` working grid.
pub const fn joint_len(dims: Dims) -> usize {
    2 * dims.area() + 1
}

/// Length of an ultrasound-only input vector (ultrasound plus constant).
pub const fn us_len(dims: Dims) -> usize {
    dims.area() + 1
}

/// Concatenated ultrasound raster, contour raster and constant 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct JointExample {
    dims: Dims,
    values: Vec<f64>,
}

impl JointExample {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ultrasound(&self) -> &[f64] {
        &self.values[..self.dims.area()]
    }

    pub fn contour(&self) -> &[f64] {
        &self.values[self.dims.area()..2 * self.dims.area()]
    }

    /// Ultrasound half followed by the constant component.
    pub fn ultrasound_input(&self) -> Vec<f64> {
        let mut v = self.ultrasound().to_vec();
        v.push(1.0);
        v
    }
}

pub fn assemble_joint(us: &UltrasoundFrame, contour: &RasterContour) -> Result<JointExample> {
    if us.dims() != contour.dims() {
        return Err(Error::domain(format!(
            "ultrasound {} and contour {} rasters differ in size",
            us.dims(),
            contour.dims()
        )));
    }
    let dims = us.dims();
    let mut values = Vec::with_capacity(joint_len(dims));
    values.extend_from_slice(us.intensities());
    values.extend(contour.mask().iter().map(|&m| m as f64));
    values.push(1.0);
    Ok(JointExample { dims, values })
}

/// Ultrasound-only network input for a working-grid frame.
pub fn ultrasound_input(us: &UltrasoundFrame) -> Vec<f64> {
    let mut v = us.intensities().to_vec();
    v.push(1.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_joint_example() {
        let us = UltrasoundFrame::constant(WORK_DIMS, 0.0).unwrap();
        let j = assemble_joint(&us, &RasterContour::zeros(WORK_DIMS)).unwrap();
        assert_eq!(j.values().len(), 1981);
        assert_eq!(JOINT_LEN, 1981);
        assert!(j.values()[..1980].iter().all(|&v| v == 0.0));
        assert_eq!(j.values()[1980], 1.0);
    }

    #[test]
    fn marker_pixel_layout() {
        let us = UltrasoundFrame::constant(WORK_DIMS, 0.0).unwrap();
        let mut c = RasterContour::zeros(WORK_DIMS);
        c.set(0, 0);
        let j = assemble_joint(&us, &c).unwrap();
        assert_eq!(j.values()[990], 1.0);
        assert_eq!(j.values().iter().filter(|&&v| v == 1.0).count(), 2);

        // row 1, column 2 lands at 990 + 33 + 2
        let mut c = RasterContour::zeros(WORK_DIMS);
        c.set(2, 1);
        let j = assemble_joint(&us, &c).unwrap();
        assert_eq!(j.values()[990 + 33 + 2], 1.0);
        assert_eq!(j.contour()[33 + 2], 1.0);
    }

    #[test]
    fn ultrasound_half_layout() {
        let mut data = vec![0.0; WORK_DIMS.area()];
        data[33 * 4 + 7] = 0.9;
        let us = UltrasoundFrame::new(WORK_DIMS, data, 0.35, 0).unwrap();
        let j = assemble_joint(&us, &RasterContour::zeros(WORK_DIMS)).unwrap();
        assert_eq!(j.values()[33 * 4 + 7], 0.9);
        assert_eq!(us.get(7, 4), 0.9);
        let input = j.ultrasound_input();
        assert_eq!(input.len(), 991);
        assert_eq!(input[990], 1.0);
        assert_eq!(input, ultrasound_input(&us));
    }

    #[test]
    fn mismatched_dims() {
        let us = UltrasoundFrame::constant(Dims::new(30, 33), 0.0).unwrap();
        assert!(assemble_joint(&us, &RasterContour::zeros(WORK_DIMS)).is_err());
    }
}
