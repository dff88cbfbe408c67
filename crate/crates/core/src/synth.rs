//! Deterministic synthetic test images.

use crate::error::Result;
use crate::frame::Frame;
use crate::round::to_u8;

/// Smooth colour gradient, diagonal luminance ramp with chroma varying
/// along each axis.
pub fn gradient(width: u32, height: u32) -> Result<Frame> {
    let (w, h) = (f64::from(width.max(2) - 1), f64::from(height.max(2) - 1));
    Frame::from_fn(width, height, |x, y| {
        let u = f64::from(x) / w;
        let v = f64::from(y) / h;
        [
            to_u8(40.0 + 180.0 * u),
            to_u8(30.0 + 100.0 * u + 90.0 * v),
            to_u8(220.0 - 170.0 * v),
        ]
    })
}

/// Scene with smooth shading, textured stripes, a checkerboard and a disc
/// that moves with `frame_index`. `frame_index` fully determines the output.
pub fn moving_pattern(width: u32, height: u32, frame_index: u64) -> Result<Frame> {
    Ok(MovingPattern::new(width, height)?.frame(frame_index))
}

/// [`moving_pattern`] with the static background rendered once.
#[derive(Debug, Clone)]
pub struct MovingPattern {
    background: Frame,
}

impl MovingPattern {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        let (w, h) = (f64::from(width), f64::from(height));
        let background = Frame::from_fn(width, height, |x, y| {
            let (fx, fy) = (f64::from(x), f64::from(y));
            let base = 60.0 + 120.0 * fx / w;
            let stripes = 35.0 * ((fx * 0.21 + fy * 0.05).sin() * (fy * 0.13).cos());
            let checker = if ((x / 24) + (y / 24)) % 2 == 0 { 18.0 } else { -18.0 };
            let lum = base + stripes + checker;
            [lum + 20.0 * (fy / h), lum, lum - 30.0 * (fy / h) + 15.0].map(to_u8)
        })?;
        Ok(Self { background })
    }

    pub fn width(&self) -> u32 {
        self.background.width()
    }

    pub fn height(&self) -> u32 {
        self.background.height()
    }

    pub fn frame(&self, frame_index: u64) -> Frame {
        let (width, height) = (self.width(), self.height());
        let (w, h) = (f64::from(width), f64::from(height));
        let t = frame_index as f64 / 30.0;
        let cx = w * (0.5 + 0.3 * (t * 0.7).cos());
        let cy = h * (0.5 + 0.25 * (t * 1.1).sin());
        let radius = 0.12 * w.min(h);
        let mut data = self.background.data().to_vec();
        let y_lo = (cy - radius).max(0.0) as u32;
        let y_hi = ((cy + radius).ceil() as u32).min(height);
        let x_lo = (cx - radius).max(0.0) as u32;
        let x_hi = ((cx + radius).ceil() as u32).min(width);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let d2 = (f64::from(x) - cx).powi(2) + (f64::from(y) - cy).powi(2);
                if d2 < radius * radius {
                    let i = (y as usize * width as usize + x as usize) * 3;
                    data[i..i + 3].copy_from_slice(&[230.0, 80.0 + 40.0 * (d2.sqrt() / radius), 60.0].map(to_u8));
                }
            }
        }
        Frame::new(width, height, data).expect("background dimensions are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(moving_pattern(64, 48, 5).unwrap(), moving_pattern(64, 48, 5).unwrap());
        assert_ne!(moving_pattern(64, 48, 5).unwrap(), moving_pattern(64, 48, 50).unwrap());
        assert_eq!(gradient(3, 3).unwrap().pixel(0, 0), [40, 30, 220]);
        let p = MovingPattern::new(64, 48).unwrap();
        assert_eq!(p.frame(5), moving_pattern(64, 48, 5).unwrap());
    }
}
