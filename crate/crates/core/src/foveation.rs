//! Gaze-centred quantization offsets.
//!
//! The offset applied to a location `p` (normalized image coordinates, both
//! axes independently mapped to `[0, 1]`) for a fixation `mu` is
//!
//! ```text
//! dq(p) = A * (1 - exp(-|p - mu|^2 / (2 * sigma)))
//! ```
//!
//! `sigma` carries normalized-distance-squared units: the denominator is
//! `2 * sigma`, not `2 * sigma^2`. Because the axes are normalized
//! independently the mask is elliptical in pixel space on non-square frames.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::round::{round_i64, to_u8};

/// Largest per-macroblock offset, mirroring the HEVC QP range.
pub const QP_DELTA_CLAMP: u8 = 51;

/// Macroblock edge used by the reference encoder configuration.
pub const DEFAULT_MB_SIZE: u32 = 32;

/// A fixation point in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub x: f64,
    pub y: f64,
    /// Microseconds since session start.
    pub timestamp: u64,
}

impl GazeSample {
    /// Builds a sample, clamping the coordinates into the unit square.
    pub fn new(x: f64, y: f64, timestamp: u64) -> Result<Self> {
        let (x, y) = clamp_gaze(x, y)?;
        Ok(Self { x, y, timestamp })
    }

    pub fn centered() -> Self {
        Self { x: 0.5, y: 0.5, timestamp: 0 }
    }
}

/// Strength `A` and spread `sigma` of the QP modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoveationParams {
    strength: f64,
    sigma: f64,
}

impl FoveationParams {
    /// The recommended operating point.
    pub const RECOMMENDED: FoveationParams = FoveationParams { strength: 50.0, sigma: 0.03 };

    pub fn new(strength: f64, sigma: f64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return Err(Error::invalid(format!("strength must be finite and >= 0, got {strength}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be finite and > 0, got {sigma}")));
        }
        Ok(Self { strength, sigma })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for FoveationParams {
    fn default() -> Self {
        Self::RECOMMENDED
    }
}

/// Clamps a raw gaze point into `[0, 1]^2`.
pub fn clamp_gaze(x: f64, y: f64) -> Result<(f64, f64)> {
    if x.is_nan() || y.is_nan() {
        return Err(Error::invalid("gaze coordinate is NaN"));
    }
    Ok((x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)))
}

/// Number of macroblock columns and rows covering a frame.
pub fn grid_dims(frame_width: u32, frame_height: u32, mb_size: u32) -> Result<(u32, u32)> {
    if frame_width == 0 || frame_height == 0 || mb_size == 0 {
        return Err(Error::invalid(format!(
            "dimensions must be positive (frame {frame_width}x{frame_height}, mb {mb_size})"
        )));
    }
    Ok((frame_width.div_ceil(mb_size), frame_height.div_ceil(mb_size)))
}

/// Unrounded QP offset at `p` for fixation `mu`. Always in `[0, A]`.
pub fn qp_delta_at(p: (f64, f64), mu: (f64, f64), params: &FoveationParams) -> f64 {
    let dx = p.0 - mu.0;
    let dy = p.1 - mu.1;
    let dist2 = dx * dx + dy * dy;
    params.strength * (1.0 - (-dist2 / (2.0 * params.sigma)).exp())
}

/// Row-major grid of per-macroblock QP offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpDeltaMap {
    cols: u32,
    rows: u32,
    mb_size: u32,
    deltas: Vec<u8>,
}

impl QpDeltaMap {
    /// An all-zero map for a frame, i.e. foveation disabled.
    pub fn zeros(frame_width: u32, frame_height: u32, mb_size: u32) -> Result<Self> {
        let (cols, rows) = grid_dims(frame_width, frame_height, mb_size)?;
        Ok(Self { cols, rows, mb_size, deltas: vec![0; (cols * rows) as usize] })
    }

    /// Uniform offset everywhere.
    pub fn uniform(frame_width: u32, frame_height: u32, mb_size: u32, delta: u8) -> Result<Self> {
        let mut map = Self::zeros(frame_width, frame_height, mb_size)?;
        map.deltas.fill(delta.min(QP_DELTA_CLAMP));
        Ok(map)
    }

    pub fn from_parts(cols: u32, rows: u32, mb_size: u32, deltas: Vec<u8>) -> Result<Self> {
        if cols == 0 || rows == 0 || mb_size == 0 {
            return Err(Error::invalid("qp map dimensions must be positive"));
        }
        if deltas.len() != (cols as usize) * (rows as usize) {
            return Err(Error::invalid(format!(
                "qp map has {} entries, expected {}x{}",
                deltas.len(),
                cols,
                rows
            )));
        }
        if let Some(bad) = deltas.iter().find(|&&d| d > QP_DELTA_CLAMP) {
            return Err(Error::invalid(format!("qp delta {bad} exceeds {QP_DELTA_CLAMP}")));
        }
        Ok(Self { cols, rows, mb_size, deltas })
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn mb_size(&self) -> u32 {
        self.mb_size
    }

    pub fn deltas(&self) -> &[u8] {
        &self.deltas
    }

    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.deltas[(row * self.cols + col) as usize]
    }

    /// True when the map matches the macroblock grid of a `width x height` frame.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        matches!(grid_dims(width, height, self.mb_size), Ok((c, r)) if c == self.cols && r == self.rows)
    }

    pub fn is_all_zero(&self) -> bool {
        self.deltas.iter().all(|&d| d == 0)
    }

    /// Binary PGM (P5) with `round(255 * dq / A)` per macroblock; white is a
    /// large offset. `A = 0` renders black.
    pub fn to_pgm(&self, strength: f64) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend(self.deltas.iter().map(|&d| {
            if strength > 0.0 {
                to_u8(255.0 * f64::from(d) / strength)
            } else {
                0
            }
        }));
        out
    }

    /// One CSV line per macroblock row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.deltas.len() * 3);
        for row in self.deltas.chunks(self.cols as usize) {
            for (i, d) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{d}");
            }
            out.push('\n');
        }
        out
    }
}

/// Normalized centre of macroblock `(col, row)`. Edge blocks use the centre
/// of the part that lies inside the frame.
fn mb_center(col: u32, row: u32, mb_size: u32, width: u32, height: u32) -> (f64, f64) {
    let x0 = col * mb_size;
    let y0 = row * mb_size;
    let x1 = (x0 + mb_size).min(width);
    let y1 = (y0 + mb_size).min(height);
    (
        (f64::from(x0) + f64::from(x1)) * 0.5 / f64::from(width),
        (f64::from(y0) + f64::from(y1)) * 0.5 / f64::from(height),
    )
}

/// Evaluates the offset at every macroblock centre, rounds half away from
/// zero and clamps into `[0, 51]`.
pub fn build_qp_map(
    frame_width: u32,
    frame_height: u32,
    mb_size: u32,
    gaze: &GazeSample,
    params: &FoveationParams,
) -> Result<QpDeltaMap> {
    let (cols, rows) = grid_dims(frame_width, frame_height, mb_size)?;
    let mu = clamp_gaze(gaze.x, gaze.y)?;
    let mut deltas = Vec::with_capacity((cols * rows) as usize);
    for row in 0..rows {
        for col in 0..cols {
            let p = mb_center(col, row, mb_size, frame_width, frame_height);
            let dq = round_i64(qp_delta_at(p, mu, params)) as f64;
            deltas.push(dq.clamp(0.0, f64::from(QP_DELTA_CLAMP)) as u8);
        }
    }
    Ok(QpDeltaMap { cols, rows, mb_size, deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_dims_examples() {
        assert_eq!(grid_dims(2472, 2178, 32).unwrap(), (78, 69));
        assert_eq!(grid_dims(32, 32, 32).unwrap(), (1, 1));
        assert_eq!(grid_dims(33, 32, 32).unwrap(), (2, 1));
        assert!(matches!(grid_dims(0, 32, 32), Err(Error::InvalidArgument(_))));
        assert!(matches!(grid_dims(32, 32, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn qp_delta_examples() {
        let p = FoveationParams::new(50.0, 0.03).unwrap();
        assert_eq!(qp_delta_at((0.3, 0.7), (0.3, 0.7), &p), 0.0);
        let v = qp_delta_at((0.7, 0.5), (0.5, 0.5), &p);
        assert!((v - 24.329_144_048_370_406).abs() < 1e-9, "{v}");
        let far = qp_delta_at((100.0, 0.0), (0.0, 0.0), &p);
        assert!(far <= 50.0 && far > 49.999);
    }

    #[test]
    fn params_validation() {
        assert!(FoveationParams::new(-1.0, 0.03).is_err());
        assert!(FoveationParams::new(50.0, 0.0).is_err());
        assert!(FoveationParams::new(f64::NAN, 0.03).is_err());
        assert!(FoveationParams::new(0.0, 0.01).is_ok());
    }

    #[test]
    fn clamp_gaze_examples() {
        assert_eq!(clamp_gaze(0.5, 0.5).unwrap(), (0.5, 0.5));
        assert_eq!(clamp_gaze(-0.2, 1.4).unwrap(), (0.0, 1.0));
        assert_eq!(clamp_gaze(1.0, 0.0).unwrap(), (1.0, 0.0));
        assert!(matches!(clamp_gaze(f64::NAN, 0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_strength_gives_zero_map() {
        let p = FoveationParams::new(0.0, 0.03).unwrap();
        let map = build_qp_map(640, 480, 32, &GazeSample::centered(), &p).unwrap();
        assert!(map.is_all_zero());
        assert!(map.to_pgm(0.0).ends_with(&[0u8; 300]));
    }

    #[test]
    fn full_size_mask_is_centred() {
        let map = build_qp_map(2472, 2178, 32, &GazeSample::centered(), &FoveationParams::RECOMMENDED).unwrap();
        assert_eq!((map.cols(), map.rows()), (78, 69));
        let min = *map.deltas().iter().min().unwrap();
        // Pixel (1236, 1089) lies in macroblock (38, 34).
        assert_eq!(map.get(38, 34), min);

        // Sorted by normalized distance from the gaze the offsets never decrease.
        let mut cells: Vec<(f64, u8)> = (0..map.rows())
            .flat_map(|r| (0..map.cols()).map(move |c| (c, r)))
            .map(|(c, r)| {
                let (x, y) = mb_center(c, r, 32, 2472, 2178);
                (((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt(), map.get(c, r))
            })
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(cells.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn corner_gaze_extremes() {
        // Oracle: evaluate the offset at every centre independently.
        let params = FoveationParams::RECOMMENDED;
        let map = build_qp_map(640, 480, 32, &GazeSample::new(0.0, 0.0, 0).unwrap(), &params).unwrap();
        let (cols, rows) = (map.cols(), map.rows());
        assert_eq!((cols, rows), (20, 15));
        let mut best = (f64::MAX, 0, 0);
        let mut worst = (f64::MIN, 0, 0);
        for r in 0..rows {
            for c in 0..cols {
                let x = (c as f64 * 32.0 + 16.0) / 640.0;
                let y = (r as f64 * 32.0 + 16.0) / 480.0;
                let v = 50.0 * (1.0 - (-(x * x + y * y) / 0.06).exp());
                if v < best.0 {
                    best = (v, c, r);
                }
                if v > worst.0 {
                    worst = (v, c, r);
                }
            }
        }
        assert_eq!((best.1, best.2), (0, 0));
        assert_eq!((worst.1, worst.2), (cols - 1, rows - 1));
        let min = *map.deltas().iter().min().unwrap();
        let max = *map.deltas().iter().max().unwrap();
        assert_eq!(map.get(0, 0), min);
        assert_eq!(map.get(cols - 1, rows - 1), max);
    }

    #[test]
    fn partial_edge_block_uses_inner_centre() {
        let (x, y) = mb_center(1, 0, 32, 40, 32);
        assert!((x - 36.0 / 40.0).abs() < 1e-12);
        assert!((y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_strength_is_clamped() {
        let p = FoveationParams::new(95.0, 0.01).unwrap();
        let map = build_qp_map(640, 480, 32, &GazeSample::centered(), &p).unwrap();
        assert_eq!(*map.deltas().iter().max().unwrap(), QP_DELTA_CLAMP);
    }

    #[test]
    fn exports() {
        let map = QpDeltaMap::from_parts(3, 2, 32, vec![0, 25, 50, 1, 2, 3]).unwrap();
        assert_eq!(map.to_csv(), "0,25,50\n1,2,3\n");
        let pgm = map.to_pgm(50.0);
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 6..], &[0, 128, 255, 5, 10, 15]);
        assert!(QpDeltaMap::from_parts(3, 2, 32, vec![0; 5]).is_err());
        assert!(QpDeltaMap::from_parts(1, 1, 32, vec![52]).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_radially_monotone(
            mx in 0.0f64..1.0, my in 0.0f64..1.0,
            a in 0.0f64..100.0, sigma in 0.001f64..0.2,
            angle in 0.0f64..std::f64::consts::TAU,
            r1 in 0.0f64..1.5, r2 in 0.0f64..1.5,
        ) {
            let params = FoveationParams::new(a, sigma).unwrap();
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let at = |r: f64| qp_delta_at((mx + r * angle.cos(), my + r * angle.sin()), (mx, my), &params);
            let (v_lo, v_hi) = (at(lo), at(hi));
            prop_assert!(v_lo >= 0.0 && v_hi >= 0.0);
            prop_assert!(v_hi <= a);
            prop_assert!(v_lo <= v_hi);
        }

        #[test]
        fn depends_only_on_distance(
            mx in 0.0f64..1.0, my in 0.0f64..1.0, r in 0.0f64..0.8,
            t1 in 0.0f64..std::f64::consts::TAU, t2 in 0.0f64..std::f64::consts::TAU,
        ) {
            let params = FoveationParams::RECOMMENDED;
            let a = qp_delta_at((mx + r * t1.cos(), my + r * t1.sin()), (mx, my), &params);
            let b = qp_delta_at((mx + r * t2.cos(), my + r * t2.sin()), (mx, my), &params);
            prop_assert!((a - b).abs() <= 1e-9);
        }

        #[test]
        fn doubling_strength_doubles_offset(
            px in 0.0f64..1.0, py in 0.0f64..1.0, mx in 0.0f64..1.0, my in 0.0f64..1.0,
            a in 0.0f64..50.0, sigma in 0.001f64..0.2,
        ) {
            let one = qp_delta_at((px, py), (mx, my), &FoveationParams::new(a, sigma).unwrap());
            let two = qp_delta_at((px, py), (mx, my), &FoveationParams::new(2.0 * a, sigma).unwrap());
            prop_assert_eq!(two, 2.0 * one);
        }

        #[test]
        fn map_entries_in_range(
            w in 1u32..700, h in 1u32..700, gx in -0.5f64..1.5, gy in -0.5f64..1.5,
            a in 0.0f64..120.0, sigma in 0.001f64..0.1,
        ) {
            let map = build_qp_map(w, h, 32, &GazeSample::new(gx, gy, 0).unwrap(),
                &FoveationParams::new(a, sigma).unwrap()).unwrap();
            prop_assert_eq!(map.deltas().len(), (w.div_ceil(32) * h.div_ceil(32)) as usize);
            prop_assert!(map.deltas().iter().all(|&d| d <= QP_DELTA_CLAMP));
        }
    }
}
