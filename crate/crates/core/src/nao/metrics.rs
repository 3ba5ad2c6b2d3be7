use super::Image;
use crate::{Error, Result};

pub const PSNR_CAP_DB: f64 = 99.0;

/// Mean squared difference over all pixels and channels.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "images are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (*x as f64 - *y as f64).powi(2)))
        .sum();
    Ok(sum / (a.pixels.len() * 3) as f64)
}

/// PSNR for unit-range images, capped at 99 dB.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m < 1e-10 { PSNR_CAP_DB } else { 10.0 * (1.0 / m).log10() })
}
