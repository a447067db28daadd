use crate::error::{Error, Result};

/// Default calibration of the full-resolution frames.
pub const DEFAULT_MM_PER_PX: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub const fn area(&self) -> usize {
        self.width * self.height
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Grayscale ultrasound frame with intensities in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrasoundFrame {
    dims: Dims,
    intensities: Vec<f64>,
    mm_per_px: f64,
    frame_index: usize,
}

impl UltrasoundFrame {
    pub fn new(dims: Dims, intensities: Vec<f64>, mm_per_px: f64, frame_index: usize) -> Result<Self> {
        if intensities.len() != dims.area() {
            return Err(Error::domain(format!(
                "frame of {dims} needs {} intensities, got {}",
                dims.area(),
                intensities.len()
            )));
        }
        if let Some(bad) = intensities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("intensity {bad} outside [0, 1]")));
        }
        if !(mm_per_px > 0.0) {
            return Err(Error::domain(format!("mm_per_px must be positive, got {mm_per_px}")));
        }
        Ok(Self {
            dims,
            intensities,
            mm_per_px,
            frame_index,
        })
    }

    pub fn constant(dims: Dims, value: f64) -> Result<Self> {
        Self::new(dims, vec![value; dims.area()], DEFAULT_MM_PER_PX, 0)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn mm_per_px(&self) -> f64 {
        self.mm_per_px
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn with_frame_index(mut self, index: usize) -> Self {
        self.frame_index = index;
        self
    }

    pub fn with_mm_per_px(mut self, mm_per_px: f64) -> Result<Self> {
        if !(mm_per_px > 0.0) {
            return Err(Error::domain(format!("mm_per_px must be positive, got {mm_per_px}")));
        }
        self.mm_per_px = mm_per_px;
        Ok(self)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.intensities[y * self.dims.width + x]
    }

    /// Intensities of column `x`, top to bottom.
    pub fn column(&self, x: usize) -> Vec<f64> {
        (0..self.dims.height).map(|y| self.get(x, y)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.intensities.iter().sum::<f64>() / self.intensities.len() as f64
    }
}

/// Axis-aligned crop rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn full(dims: Dims) -> Self {
        Self {
            x: 0,
            y: 0,
            width: dims.width,
            height: dims.height,
        }
    }
}

pub fn crop_roi(frame: &UltrasoundFrame, rect: Rect) -> Result<UltrasoundFrame> {
    let d = frame.dims();
    if rect.width == 0
        || rect.height == 0
        || rect.x + rect.width > d.width
        || rect.y + rect.height > d.height
    {
        return Err(Error::domain(format!(
            "roi {}x{}+{}+{} outside frame {d}",
            rect.width, rect.height, rect.x, rect.y
        )));
    }
    let mut out = Vec::with_capacity(rect.width * rect.height);
    for y in rect.y..rect.y + rect.height {
        let start = y * d.width + rect.x;
        out.extend_from_slice(&frame.intensities()[start..start + rect.width]);
    }
    UltrasoundFrame::new(
        Dims::new(rect.width, rect.height),
        out,
        frame.mm_per_px(),
        frame.frame_index(),
    )
}

/// Overlap weights of each output cell with the input pixels along one axis,
/// in input-pixel units.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n_in);
            (first..last)
                .filter_map(|i| {
                    let w = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                    (w > 0.0).then_some((i, w))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted downsampling: each output pixel is the mean of the input
/// area it covers.
pub fn downsample(frame: &UltrasoundFrame, out: Dims) -> Result<UltrasoundFrame> {
    let d = frame.dims();
    if out.width == 0 || out.height == 0 || d.width < out.width || d.height < out.height {
        return Err(Error::domain(format!("cannot downsample {d} to {out}")));
    }
    let wx = axis_weights(d.width, out.width);
    let wy = axis_weights(d.height, out.height);
    let cell_area = (d.width as f64 / out.width as f64) * (d.height as f64 / out.height as f64);
    let src = frame.intensities();
    let mut data = Vec::with_capacity(out.area());
    for row_weights in &wy {
        for col_weights in &wx {
            let mut acc = 0.0;
            for &(y, w_y) in row_weights {
                let row = &src[y * d.width..(y + 1) * d.width];
                for &(x, w_x) in col_weights {
                    acc += w_y * w_x * row[x];
                }
            }
            data.push((acc / cell_area).clamp(0.0, 1.0));
        }
    }
    UltrasoundFrame::new(out, data, frame.mm_per_px(), frame.frame_index())
}
