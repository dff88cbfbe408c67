//! BT.601 full-range YCbCr with 2x2 box-filtered chroma.

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Sample with edge replication outside the plane.
    pub fn get_clamped(&self, x: u32, y: u32) -> u8 {
        self.get(x.min(self.width - 1), y.min(self.height - 1))
    }
}

/// Planar 4:2:0 image. Luma covers at least `width x height`, chroma at
/// least half that, rounded up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YCbCr420 {
    pub width: u32,
    pub height: u32,
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
}

// BT.601 coefficients scaled by 2^16. Each row of the forward matrix sums
// to 65536 (luma) or 0 (chroma), so gray maps to Y = gray, Cb = Cr = 128.
const YR: i32 = 19_595;
const YG: i32 = 38_470;
const YB: i32 = 7_471;
const CB_R: i32 = -11_059;
const CB_G: i32 = -21_709;
const CB_B: i32 = 32_768;
const CR_R: i32 = 32_768;
const CR_G: i32 = -27_439;
const CR_B: i32 = -5_329;
const R_CR: i32 = 91_881;
const G_CB: i32 = -22_554;
const G_CR: i32 = -46_802;
const B_CB: i32 = 116_130;

/// `round(num / 2^shift)` with halves away from zero.
#[inline]
fn round_shift(num: i32, shift: u32) -> i32 {
    let half = 1 << (shift - 1);
    if num >= 0 {
        (num + half) >> shift
    } else {
        -((-num + half) >> shift)
    }
}

#[inline]
fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

pub fn rgb_to_ycbcr420(frame: &Frame) -> Result<YCbCr420> {
    let (w, h) = (frame.width(), frame.height());
    if w == 0 || h == 0 {
        return Err(Error::invalid("empty frame"));
    }
    // Odd sizes are padded to even by edge replication.
    let (pw, ph) = (w + w % 2, h + h % 2);
    let (cw, ch) = (pw / 2, ph / 2);
    let mut y_plane = Plane::new(pw, ph);
    let mut cb = Plane::new(cw, ch);
    let mut cr = Plane::new(cw, ch);
    let data = frame.data();
    let row_of = |y: u32| {
        let y = y.min(h - 1) as usize;
        &data[y * w as usize * 3..(y + 1) * w as usize * 3]
    };
    for cy in 0..ch {
        let rows = [row_of(2 * cy), row_of(2 * cy + 1)];
        for cx in 0..cw {
            let (mut cb_acc, mut cr_acc) = (0i32, 0i32);
            for (dy, row) in rows.iter().enumerate() {
                for dx in 0..2 {
                    let x = (2 * cx + dx).min(w - 1) as usize;
                    let (r, g, b) = (i32::from(row[3 * x]), i32::from(row[3 * x + 1]), i32::from(row[3 * x + 2]));
                    let yi = (2 * cy as usize + dy) * pw as usize + 2 * cx as usize + dx as usize;
                    y_plane.data[yi] = clamp_u8(round_shift(YR * r + YG * g + YB * b, 16));
                    cb_acc += CB_R * r + CB_G * g + CB_B * b;
                    cr_acc += CR_R * r + CR_G * g + CR_B * b;
                }
            }
            let ci = (cy * cw + cx) as usize;
            cb.data[ci] = clamp_u8(128 + round_shift(cb_acc, 18));
            cr.data[ci] = clamp_u8(128 + round_shift(cr_acc, 18));
        }
    }
    Ok(YCbCr420 { width: w, height: h, y: y_plane, cb, cr })
}

pub fn ycbcr420_to_rgb(planes: &YCbCr420) -> Result<Frame> {
    let (w, h) = (planes.width, planes.height);
    if w == 0 || h == 0 {
        return Err(Error::invalid("empty frame"));
    }
    let chroma_ok = |p: &Plane| p.width >= w.div_ceil(2) && p.height >= h.div_ceil(2);
    if planes.y.width < w || planes.y.height < h || !chroma_ok(&planes.cb) || !chroma_ok(&planes.cr) {
        return Err(Error::invalid("planes are smaller than the frame"));
    }
    let mut data = vec![0u8; w as usize * h as usize * 3];
    for (y, out) in data.chunks_exact_mut(w as usize * 3).enumerate() {
        let luma = &planes.y.data[y * planes.y.width as usize..][..w as usize];
        let cb_row = &planes.cb.data[(y / 2) * planes.cb.width as usize..];
        let cr_row = &planes.cr.data[(y / 2) * planes.cr.width as usize..];
        for (x, (px, &l)) in out.chunks_exact_mut(3).zip(luma).enumerate() {
            let l = i32::from(l) << 16;
            let cb = i32::from(cb_row[x / 2]) - 128;
            let cr = i32::from(cr_row[x / 2]) - 128;
            px[0] = clamp_u8(round_shift(l + R_CR * cr, 16));
            px[1] = clamp_u8(round_shift(l + G_CB * cb + G_CR * cr, 16));
            px[2] = clamp_u8(round_shift(l + B_CB * cb, 16));
        }
    }
    Frame::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_is_achromatic() {
        let planes = rgb_to_ycbcr420(&Frame::filled(6, 4, [128, 128, 128]).unwrap()).unwrap();
        assert!(planes.y.data.iter().all(|&v| v == 128));
        assert!(planes.cb.data.iter().chain(&planes.cr.data).all(|&v| v == 128));
    }

    #[test]
    fn white_luma() {
        let planes = rgb_to_ycbcr420(&Frame::filled(2, 2, [255, 255, 255]).unwrap()).unwrap();
        assert!(planes.y.data.iter().all(|&v| v >= 254));
    }

    #[test]
    fn odd_dims_are_padded() {
        let f = Frame::from_fn(5, 3, |x, y| [(x * 40) as u8, (y * 50) as u8, 90]).unwrap();
        let planes = rgb_to_ycbcr420(&f).unwrap();
        assert_eq!((planes.y.width, planes.y.height), (6, 4));
        assert_eq!((planes.cb.width, planes.cb.height), (3, 2));
        assert_eq!(ycbcr420_to_rgb(&planes).unwrap().width(), 5);
    }

    #[test]
    fn constant_chroma_round_trip() {
        // Luma varies, chroma is constant per 2x2 cell: within +-1.
        let f = Frame::from_fn(16, 16, |x, y| {
            let v = (x * 9 + y * 5) as u8;
            [v.saturating_add(20), v.saturating_add(10), v]
        })
        .unwrap();
        let back = ycbcr420_to_rgb(&rgb_to_ycbcr420(&f).unwrap()).unwrap();
        for (a, b) in f.data().iter().zip(back.data()) {
            assert!((i16::from(*a) - i16::from(*b)).abs() <= 1, "{a} vs {b}");
        }
    }

    #[test]
    fn smooth_gradient_round_trip() {
        let f = crate::synth::gradient(256, 192).unwrap();
        let back = ycbcr420_to_rgb(&rgb_to_ycbcr420(&f).unwrap()).unwrap();
        let worst = f.data().iter().zip(back.data()).map(|(a, b)| (i16::from(*a) - i16::from(*b)).abs()).max().unwrap();
        assert!(worst <= 2, "max error {worst}");
    }
}
