//! Numeric substrate: dense matrices, seeded random streams, the logistic
//! nonlinearity, Bernoulli sampling and RMS error.
//!
//! All kernels run serially. Random draws are consumed in one fixed order:
//! row-major over matrices, examples in dataset order.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::{derive_seed, RandomStream};

use crate::error::{Error, Result};

/// Logistic function, evaluated through `exp(-|x|)` so it never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Returns `true` with probability `p`. Always consumes exactly one draw.
pub fn sample_bernoulli(p: f64, rng: &mut RandomStream) -> Result<bool> {
    let u = rng.next_f64();
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(u < p)
}

/// Root mean squared difference of two equal-length vectors.
pub fn rms_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "rms_diff length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::domain("rms_diff of empty vectors"));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / a.len() as f64).sqrt())
}
