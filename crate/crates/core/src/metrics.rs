//! Mean squared error and peak signal-to-noise ratio for 8-bit images.

use std::fmt;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Peak sample value used for PSNR.
pub const PEAK: f64 = 255.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    /// Mean squared error in gray levels squared.
    pub mse: f64,
    /// PSNR in decibels; `f64::INFINITY` when the images are identical.
    pub psnr_db: f64,
}

impl QualityReport {
    pub fn from_mse(mse: f64) -> Self {
        Self {
            mse,
            psnr_db: psnr_from_mse(mse),
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.mse == 0.0
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mse {:.4}, psnr {} dB",
            self.mse,
            format_db(self.psnr_db)
        )
    }
}

/// PSNR to four decimals, or `inf`.
pub fn format_db(psnr_db: f64) -> String {
    if psnr_db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr_db:.4}")
    }
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{} with {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = u64::from(x.abs_diff(y));
            d * d
        })
        .sum();
    Ok(sse as f64 / a.samples().len() as f64)
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<QualityReport> {
    Ok(QualityReport::from_mse(mse(a, b)?))
}
