//! Contour extraction with a translational model: ultrasound in, contour
//! half of the reconstruction out, reduced to one point per column.

use crate::error::{Error, Result};
use crate::imaging::{
    rescale_pixel_centres, ultrasound_input, ContourPointSet, Dims, Point, UltrasoundFrame,
};
use crate::model::{DeepAutoencoder, FirstLayerMode};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// Reconstructed contour values below this are ignored.
    pub mask_threshold: f64,
    /// Columns whose remaining mass is below this emit no point.
    pub min_column_mass: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            mask_threshold: 0.3,
            min_column_mass: 0.3,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_threshold) {
            return Err(Error::domain(format!(
                "mask_threshold {} outside [0, 1]",
                self.mask_threshold
            )));
        }
        if !(self.min_column_mass >= 0.0) {
            return Err(Error::domain(format!(
                "min_column_mass must be >= 0, got {}",
                self.min_column_mass
            )));
        }
        Ok(())
    }
}

/// Real-valued working-grid image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourImage {
    pub dims: Dims,
    pub values: Vec<f64>,
}

impl ContourImage {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.dims.width + x]
    }
}

fn check_model(model: &DeepAutoencoder, dims: Dims) -> Result<()> {
    if model.mode() != FirstLayerMode::Translational {
        return Err(Error::Mode(
            "contour extraction needs a translational-mode model".into(),
        ));
    }
    if model.joint_len() != 2 * dims.area() + 1 {
        return Err(Error::domain(format!(
            "model joint width {} does not fit a {dims} working grid",
            model.joint_len()
        )));
    }
    Ok(())
}

/// Reconstructed contour halves for a batch of working-grid frames.
pub fn reconstruct_contour_images(
    model: &DeepAutoencoder,
    frames: &[UltrasoundFrame],
) -> Result<Vec<ContourImage>> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let dims = first.dims();
    check_model(model, dims)?;
    if frames.iter().any(|f| f.dims() != dims) {
        return Err(Error::domain("frames differ in size"));
    }
    let rows: Vec<Vec<f64>> = frames.iter().map(ultrasound_input).collect();
    let recon = model.autoencode_batch(&Matrix::from_rows(&rows)?)?;
    let area = dims.area();
    Ok(recon
        .row_iter()
        .map(|r| ContourImage {
            dims,
            values: r[area..2 * area].to_vec(),
        })
        .collect())
}

pub fn reconstruct_contour_image(model: &DeepAutoencoder, us: &UltrasoundFrame) -> Result<ContourImage> {
    Ok(reconstruct_contour_images(model, std::slice::from_ref(us))?.remove(0))
}

/// Per column: drop values below the mask threshold, and if the remaining
/// mass reaches `min_column_mass`, emit the mass-weighted mean row. Points
/// are then mapped onto `original` with pixel centres aligned. An empty
/// result marks a frame with no usable contour.
pub fn extract_contour(image: &ContourImage, cfg: &ExtractionConfig, original: Dims) -> Result<ContourPointSet> {
    cfg.validate()?;
    let d = image.dims;
    let mut points = Vec::new();
    for x in 0..d.width {
        let (mut mass, mut moment) = (0.0, 0.0);
        for y in 0..d.height {
            let v = image.get(x, y);
            if v >= cfg.mask_threshold {
                mass += v;
                moment += v * y as f64;
            }
        }
        if mass > 0.0 && mass >= cfg.min_column_mass {
            points.push(Point::new(x as f64, moment / mass));
        }
    }
    let working = ContourPointSet::new(points)?;
    rescale_pixel_centres(&working, d, original)
}

/// Copy of `frame` with the contour burned in at full intensity.
pub fn overlay(frame: &UltrasoundFrame, contour: &ContourPointSet) -> Result<UltrasoundFrame> {
    let d = frame.dims();
    let mut data = frame.intensities().to_vec();
    for p in contour.points() {
        let (x, y) = (p.x.round(), p.y.round());
        if x >= 0.0 && y >= 0.0 && (x as usize) < d.width && (y as usize) < d.height {
            data[y as usize * d.width + x as usize] = 1.0;
        }
    }
    UltrasoundFrame::new(d, data, frame.mm_per_px(), frame.frame_index())
}
