//! Luma PSNR and block-edge statistics.

use crate::error::{Error, Result};
use crate::frame::{luma_of, Frame};

/// Reported instead of infinity for identical inputs.
pub const MAX_PSNR: f64 = 100.0;

fn check_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::invalid(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        MAX_PSNR
    } else {
        (10.0 * (255.0 * 255.0 / mse).log10()).min(MAX_PSNR)
    }
}

/// Luma PSNR over pixels where `keep(x, y)` holds. Errors if no pixel is kept.
pub fn psnr_masked(a: &Frame, b: &Frame, mut keep: impl FnMut(u32, u32) -> bool) -> Result<f64> {
    check_dims(a, b)?;
    let mut sum = 0.0;
    let mut n = 0u64;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if keep(x, y) {
                let d = luma_of(a.pixel(x, y)) - luma_of(b.pixel(x, y));
                sum += d * d;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::invalid("mask selects no pixels"));
    }
    Ok(psnr_from_mse(sum / n as f64))
}

/// Luma (BT.601) PSNR in dB.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    psnr_masked(a, b, |_, _| true)
}

/// PSNR restricted to pixels whose normalized distance from `gaze` is at
/// most `radius`. Axes are normalized independently, as for QP maps.
pub fn foveal_psnr(a: &Frame, b: &Frame, gaze: (f64, f64), radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let (w, h) = (f64::from(a.width()), f64::from(a.height()));
    psnr_masked(a, b, |x, y| {
        let dx = (f64::from(x) + 0.5) / w - gaze.0;
        let dy = (f64::from(y) + 0.5) / h - gaze.1;
        dx * dx + dy * dy <= radius * radius
    })
}

/// Mean squared luma step between horizontally or vertically adjacent
/// pixels, split by whether the pair straddles a macroblock boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEnergy {
    pub boundary: f64,
    pub interior: f64,
}

/// Gradient energy across macroblock edges versus pairs inside one 8x8 block.
pub fn edge_energy(frame: &Frame, mb_size: u32) -> Result<EdgeEnergy> {
    if mb_size == 0 || !mb_size.is_multiple_of(8) {
        return Err(Error::invalid(format!("macroblock size {mb_size} must be a multiple of 8")));
    }
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let luma = frame.luma();
    let mb = mb_size as usize;
    let (mut bsum, mut bn, mut isum, mut in_) = (0.0, 0u64, 0.0, 0u64);
    let mut add = |a: usize, b: usize, pos: usize| {
        let d = luma[a] - luma[b];
        // `pos` is the coordinate of the second pixel along the step direction.
        if pos.is_multiple_of(mb) {
            bsum += d * d;
            bn += 1;
        } else if !pos.is_multiple_of(8) {
            isum += d * d;
            in_ += 1;
        }
    };
    for y in 0..h {
        for x in 1..w {
            add(y * w + x - 1, y * w + x, x);
        }
    }
    for y in 1..h {
        for x in 0..w {
            add((y - 1) * w + x, y * w + x, y);
        }
    }
    if bn == 0 || in_ == 0 {
        return Err(Error::invalid("frame too small to contain a macroblock boundary"));
    }
    Ok(EdgeEnergy { boundary: bsum / bn as f64, interior: isum / in_ as f64 })
}
