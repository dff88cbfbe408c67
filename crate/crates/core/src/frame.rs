//! Raw 8-bit RGB frames.

use crate::error::{Error, Result};
use crate::round::to_u8;

/// Interleaved 8-bit sRGB, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame").field("width", &self.width).field("height", &self.height).finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("frame dimensions must be positive"));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "frame buffer has {} bytes, expected {expected} for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.iter().copied().cycle().take(n * 3).collect())
    }

    /// Builds a frame from a per-pixel generator.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Drops the alpha channel of an RGBA buffer.
    pub fn from_rgba(width: u32, height: u32, rgba: &[u8]) -> Result<Self> {
        if rgba.len() != width as usize * height as usize * 4 {
            return Err(Error::invalid("rgba buffer size does not match dimensions"));
        }
        Self::new(width, height, rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect())
    }

    pub fn to_rgba(&self) -> Vec<u8> {
        self.data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// BT.601 luma of every pixel, unrounded.
    pub fn luma(&self) -> Vec<f64> {
        self.data.chunks_exact(3).map(|p| luma_of([p[0], p[1], p[2]])).collect()
    }

    /// Bilinear sample at a pixel-centre coordinate. `None` outside the image.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        let (w, h) = (f64::from(self.width - 1), f64::from(self.height - 1));
        if !(x >= 0.0 && y >= 0.0 && x <= w && y <= h) {
            return None;
        }
        let x0 = x as u32;
        let y0 = y as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - f64::from(x0);
        let fy = y - f64::from(y0);
        let (a, b, c, d) = (self.pixel(x0, y0), self.pixel(x1, y0), self.pixel(x0, y1), self.pixel(x1, y1));
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let top = f64::from(a[ch]) * (1.0 - fx) + f64::from(b[ch]) * fx;
            let bottom = f64::from(c[ch]) * (1.0 - fx) + f64::from(d[ch]) * fx;
            out[ch] = top * (1.0 - fy) + bottom * fy;
        }
        Some(out)
    }

    /// Bilinear resize to new dimensions (pixel centres aligned).
    pub fn resize(&self, width: u32, height: u32) -> Result<Frame> {
        let sx = f64::from(self.width) / f64::from(width);
        let sy = f64::from(self.height) / f64::from(height);
        let max_x = f64::from(self.width - 1);
        let max_y = f64::from(self.height - 1);
        Frame::from_fn(width, height, |x, y| {
            let u = ((f64::from(x) + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let v = ((f64::from(y) + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let s = self.sample_bilinear(u, v).unwrap_or([0.0; 3]);
            s.map(to_u8)
        })
    }

    #[cfg(feature = "png")]
    pub fn load_png(path: impl AsRef<std::path::Path>) -> Result<Frame> {
        let img = image::open(path.as_ref()).map_err(|e| Error::Image(format!("{}: {e}", path.as_ref().display())))?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Frame::new(w, h, rgb.into_raw())
    }

    #[cfg(feature = "png")]
    pub fn save_png(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        image::save_buffer_with_format(
            path.as_ref(),
            &self.data,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )
        .map_err(|e| Error::Image(format!("{}: {e}", path.as_ref().display())))
    }
}

pub fn luma_of(p: [u8; 3]) -> f64 {
    0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
}
