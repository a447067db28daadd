//! Tongue contour extraction from ultrasound frames.
//!
//! A stacked-RBM autoencoder is trained on joint (ultrasound, contour)
//! examples. Its bottom layer is then replaced by a translational RBM that
//! sees ultrasound only, so the decoder can reconstruct a contour image from
//! an ultrasound frame alone. Extracted contours are scored with the Mean
//! Sum of Distances metric.

pub mod autolabel;
pub mod cli;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod inference;
pub mod model;
pub mod numerics;
pub mod synth;

pub use error::{Error, Result};
