//! Orthonormal 8x8 DCT-II.
//!
//! The basis is built from literal cosine values so every platform uses
//! bit-identical coefficients.

use crate::round::round_i64;

/// cos(k * pi / 16) for k = 0..=8.
const COS16: [f64; 9] = [
    1.0,
    0.980_785_280_403_230_4,
    0.923_879_532_511_286_7,
    0.831_469_612_302_545_2,
    std::f64::consts::FRAC_1_SQRT_2,
    0.555_570_233_019_602_2,
    0.382_683_432_365_089_8,
    0.195_090_322_016_128_3,
    0.0,
];

/// cos(m * pi / 16) for any integer m.
const fn cos_sixteenth(m: usize) -> f64 {
    let m = m % 32;
    let m = if m > 16 { 32 - m } else { m };
    if m > 8 {
        -COS16[16 - m]
    } else {
        COS16[m]
    }
}

const fn basis() -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    let mut k = 0;
    while k < 8 {
        let scale = if k == 0 { 0.353_553_390_593_273_8 } else { 0.5 };
        let mut n = 0;
        while n < 8 {
            m[k][n] = scale * cos_sixteenth((2 * n + 1) * k);
            n += 1;
        }
        k += 1;
    }
    m
}

/// `BASIS[k][n]`: frequency `k`, sample `n`.
pub(crate) const BASIS: [[f64; 8]; 8] = basis();

/// 8-point forward transform using `BASIS[k][7 - n] = (-1)^k BASIS[k][n]`.
#[inline]
fn forward8(x: [f64; 8]) -> [f64; 8] {
    let s = [x[0] + x[7], x[1] + x[6], x[2] + x[5], x[3] + x[4]];
    let d = [x[0] - x[7], x[1] - x[6], x[2] - x[5], x[3] - x[4]];
    let mut out = [0.0; 8];
    for (k, o) in out.iter_mut().enumerate() {
        let v = if k % 2 == 0 { &s } else { &d };
        let b = &BASIS[k];
        *o = b[0] * v[0] + b[1] * v[1] + b[2] * v[2] + b[3] * v[3];
    }
    out
}

#[inline]
fn inverse8(c: [f64; 8]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for n in 0..4 {
        let even = BASIS[0][n] * c[0] + BASIS[2][n] * c[2] + BASIS[4][n] * c[4] + BASIS[6][n] * c[6];
        let odd = BASIS[1][n] * c[1] + BASIS[3][n] * c[3] + BASIS[5][n] * c[5] + BASIS[7][n] * c[7];
        out[n] = even + odd;
        out[7 - n] = even - odd;
    }
    out
}

/// Forward transform of a row-major block, rounded to integers.
pub(crate) fn forward(block: &[f64; 64]) -> [i32; 64] {
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        let row: [f64; 8] = block[y * 8..y * 8 + 8].try_into().unwrap();
        tmp[y * 8..y * 8 + 8].copy_from_slice(&forward8(row));
    }
    let mut out = [0i32; 64];
    for l in 0..8 {
        let col = std::array::from_fn(|y| tmp[y * 8 + l]);
        for (k, v) in forward8(col).into_iter().enumerate() {
            out[k * 8 + l] = round_i64(v) as i32;
        }
    }
    out
}

/// Inverse transform back to samples.
pub(crate) fn inverse(coef: &[f64; 64]) -> [f64; 64] {
    let mut tmp = [0.0f64; 64];
    for k in 0..8 {
        let row: [f64; 8] = coef[k * 8..k * 8 + 8].try_into().unwrap();
        if row.iter().any(|&v| v != 0.0) {
            tmp[k * 8..k * 8 + 8].copy_from_slice(&inverse8(row));
        }
    }
    let mut out = [0.0f64; 64];
    for x in 0..8 {
        let col = std::array::from_fn(|k| tmp[k * 8 + x]);
        for (y, v) in inverse8(col).into_iter().enumerate() {
            out[y * 8 + x] = v;
        }
    }
    out
}

/// Zigzag scan: position `i` of the scan reads raster index `ZIGZAG[i]`.
pub(crate) const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54,
    47, 55, 62, 63,
];

/// Frequency weight `1 + 3 t^2` with `t = (u + v) / 14`: 1 at DC, 4 at the
/// highest frequency.
pub(crate) const fn weight(index: usize) -> f64 {
    let u = index / 8;
    let v = index % 8;
    let t = (u + v) as f64 / 14.0;
    1.0 + 3.0 * t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_matches_libm() {
        for k in 0..8 {
            for n in 0..8 {
                let scale = if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
                let expect = scale * (((2 * n + 1) * k) as f64 * std::f64::consts::PI / 16.0).cos();
                assert!((BASIS[k][n] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthonormal() {
        for a in 0..8 {
            for b in 0..8 {
                let d: f64 = (0..8).map(|n| BASIS[a][n] * BASIS[b][n]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn butterflies_match_direct_sums() {
        let mut block = [0.0; 64];
        for (i, v) in block.iter_mut().enumerate() {
            *v = ((i * 73 + 11) % 256) as f64 - 128.0;
        }
        let fast = forward(&block);
        let unrounded = inverse(&fast.map(f64::from));
        for k in 0..8 {
            for l in 0..8 {
                let mut direct = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        direct += BASIS[k][y] * BASIS[l][x] * block[y * 8 + x];
                    }
                }
                assert!((f64::from(fast[k * 8 + l]) - direct).abs() <= 0.5 + 1e-9);
            }
        }
        for y in 0..8 {
            for x in 0..8 {
                let direct: f64 = (0..64).map(|i| BASIS[i / 8][y] * BASIS[i % 8][x] * f64::from(fast[i])).sum();
                assert!((unrounded[y * 8 + x] - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_block_is_dc_only() {
        let block = [10.0; 64];
        let c = forward(&block);
        assert_eq!(c[0], 80);
        assert!(c[1..].iter().all(|&v| v == 0));
    }

    #[test]
    fn round_trip() {
        let mut block = [0.0; 64];
        for (i, v) in block.iter_mut().enumerate() {
            *v = ((i * 37) % 255) as f64 - 128.0;
        }
        let c = forward(&block).map(f64::from);
        let back = inverse(&c);
        for (a, b) in block.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1.0);
        }
    }

    #[test]
    fn zigzag_is_permutation() {
        let mut seen = [false; 64];
        for &z in &ZIGZAG {
            assert!(!seen[z]);
            seen[z] = true;
        }
        assert_eq!(weight(0), 1.0);
        assert_eq!(weight(63), 4.0);
    }
}
