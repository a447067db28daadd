//! Synthetic ultrasound-like sequences with known tongue-surface contours.
//!
//! Each frame shows a bright band whose peak follows a smooth single-valued
//! curve. The band falls off slowly above the curve and sharply below it, so
//! the white-to-black lower edge sits on the curve. Speckle is multiplicative
//! Rayleigh noise drawn independently per pixel.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::imaging::{ContourPointSet, Dims, Point, UltrasoundFrame, DEFAULT_MM_PER_PX};
use crate::numerics::RandomStream;

/// Width of the lower falloff relative to `band_sigma`.
pub const LOWER_FALLOFF_RATIO: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    /// Upper falloff width of the bright band, px.
    pub band_sigma: f64,
    /// Largest per-column contour motion between consecutive frames, px.
    pub drift_rate: f64,
    pub rayleigh_scale: f64,
    pub background_level: f64,
    /// Speckle on/off; when off frames are the clean band image.
    pub speckle: bool,
    pub mm_per_px: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 2050,
            width: 99,
            height: 90,
            band_sigma: 3.0,
            drift_rate: 2.0,
            // unit-mean multiplier
            rayleigh_scale: (2.0 / PI).sqrt(),
            background_level: 0.15,
            speckle: true,
            mm_per_px: DEFAULT_MM_PER_PX,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn margin(&self) -> f64 {
        (2.0 * self.band_sigma + 2.0).max(3.0)
    }

    /// Half the vertical range available to the curve around the centre row.
    fn half_range(&self) -> f64 {
        (self.height as f64 - 1.0) / 2.0 - self.margin()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        if self.frames == 0 {
            return fail("synth needs at least one frame".into());
        }
        if self.width < 33 || self.height < 30 {
            return fail(format!("synth frame {}x{} below 33x30", self.width, self.height));
        }
        if !(self.band_sigma > 0.0) {
            return fail(format!("band_sigma must be positive, got {}", self.band_sigma));
        }
        if !(self.drift_rate >= 0.0) {
            return fail(format!("drift_rate must be >= 0, got {}", self.drift_rate));
        }
        if !(self.rayleigh_scale > 0.0) {
            return fail(format!("rayleigh_scale must be positive, got {}", self.rayleigh_scale));
        }
        if !(0.0..=1.0).contains(&self.background_level) {
            return fail(format!("background_level {} outside [0, 1]", self.background_level));
        }
        if !(self.mm_per_px > 0.0) {
            return fail(format!("mm_per_px must be positive, got {}", self.mm_per_px));
        }
        if self.half_range() <= 0.0 {
            return fail(format!(
                "height {} too small for band_sigma {}",
                self.height, self.band_sigma
            ));
        }
        Ok(())
    }
}

/// A shape parameter oscillating slowly over time.
#[derive(Debug, Clone, Copy)]
struct Oscillator {
    base: f64,
    amplitude: f64,
    period: f64,
    phase: f64,
}

impl Oscillator {
    fn draw(rng: &mut RandomStream, base: (f64, f64), amplitude: (f64, f64)) -> Self {
        Self {
            base: rng.uniform(base.0, base.1),
            amplitude: rng.uniform(amplitude.0, amplitude.1),
            period: rng.uniform(60.0, 240.0),
            phase: rng.uniform(0.0, TAU),
        }
    }

    fn at(&self, t: f64) -> f64 {
        self.base + self.amplitude * (TAU * t / self.period + self.phase).sin()
    }
}

/// `y(s) = c + offset + tilt·u + curvature·u² + amp·sin(2πs/λ + φ)` with
/// `s = x/(w-1)` and `u = 2s - 1`. Coefficient bounds sum to 0.95 of the
/// half range, so the curve never leaves the band margin.
#[derive(Debug, Clone)]
struct CurveFamily {
    centre: f64,
    offset: Oscillator,
    tilt: Oscillator,
    curvature: Oscillator,
    sine_amp: Oscillator,
    wavelength: f64,
    sine_phase0: f64,
    sine_phase_period: f64,
}

impl CurveFamily {
    fn draw(cfg: &SynthConfig, rng: &mut RandomStream) -> Self {
        let r = cfg.half_range();
        Self {
            centre: (cfg.height as f64 - 1.0) / 2.0,
            offset: Oscillator::draw(rng, (-0.1 * r, 0.1 * r), (0.1 * r, 0.2 * r)),
            tilt: Oscillator::draw(rng, (-0.1 * r, 0.1 * r), (0.05 * r, 0.1 * r)),
            curvature: Oscillator::draw(rng, (0.1 * r, 0.2 * r), (0.05 * r, 0.1 * r)),
            sine_amp: Oscillator::draw(rng, (0.03 * r, 0.08 * r), (0.0, 0.07 * r)),
            wavelength: rng.uniform(0.6, 1.2),
            sine_phase0: rng.uniform(0.0, TAU),
            sine_phase_period: rng.uniform(80.0, 300.0),
        }
    }

    fn row(&self, t: f64, x: usize, width: usize) -> f64 {
        let s = x as f64 / (width - 1) as f64;
        let u = 2.0 * s - 1.0;
        let phase = self.sine_phase0 + TAU * t / self.sine_phase_period;
        self.centre
            + self.offset.at(t)
            + self.tilt.at(t) * u
            + self.curvature.at(t) * u * u
            + self.sine_amp.at(t) * (TAU * s / self.wavelength + phase).sin()
    }
}

/// Noise-free intensity at `row` for a band peaked at `curve_row`.
pub fn clean_intensity(row: f64, curve_row: f64, cfg: &SynthConfig) -> f64 {
    let d = row - curve_row;
    let sigma = if d <= 0.0 {
        cfg.band_sigma
    } else {
        cfg.band_sigma * LOWER_FALLOFF_RATIO
    };
    let band = (1.0 - cfg.background_level) * (-d * d / (2.0 * sigma * sigma)).exp();
    (cfg.background_level + band).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub frames: Vec<UltrasoundFrame>,
    pub truths: Vec<ContourPointSet>,
}

/// Generates `cfg.frames` frames and their truth contours (one point per
/// column). Draw order: curve coefficients, then speckle row-major per frame.
pub fn gen_sequence(cfg: &SynthConfig) -> Result<SynthSequence> {
    cfg.validate()?;
    let mut rng = RandomStream::new(cfg.seed);
    let family = CurveFamily::draw(cfg, &mut rng);
    let dims = Dims::new(cfg.width, cfg.height);

    let mut frames = Vec::with_capacity(cfg.frames);
    let mut truths = Vec::with_capacity(cfg.frames);
    let mut rows: Vec<f64> = (0..cfg.width).map(|x| family.row(0.0, x, cfg.width)).collect();
    for t in 0..cfg.frames {
        if t > 0 {
            for (x, y) in rows.iter_mut().enumerate() {
                let target = family.row(t as f64, x, cfg.width);
                *y += (target - *y).clamp(-cfg.drift_rate, cfg.drift_rate);
            }
        }
        let mut data = Vec::with_capacity(dims.area());
        for r in 0..cfg.height {
            for &curve in &rows {
                let clean = clean_intensity(r as f64, curve, cfg);
                let v = if cfg.speckle {
                    (clean * rng.rayleigh(cfg.rayleigh_scale)).clamp(0.0, 1.0)
                } else {
                    clean
                };
                data.push(v);
            }
        }
        frames.push(UltrasoundFrame::new(dims, data, cfg.mm_per_px, t)?);
        let pts = rows
            .iter()
            .enumerate()
            .map(|(x, &y)| Point::new(x as f64, y))
            .collect();
        truths.push(ContourPointSet::new(pts)?);
    }
    Ok(SynthSequence { frames, truths })
}
