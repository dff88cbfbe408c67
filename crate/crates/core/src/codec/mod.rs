//! Deterministic all-intra block-transform codec (`FVC1`).
//!
//! Every frame is coded independently. Each macroblock gets its own
//! quantizer `clamp(base_qp + dq, 0, 102)` with step `1.12^qp`, so a
//! [`QpDeltaMap`] steers quality spatially exactly as a hardware encoder's
//! per-macroblock QP-delta interface would.
//!
//! Bitstream layout (integers little-endian):
//!
//! ```text
//! "FVC1" | width u32 | height u32 | mb_size u16 | base_qp i16 | dq u8 * cols*rows
//! macroblock 0 | macroblock 1 | ...            (raster order, byte aligned each)
//! ```
//!
//! A macroblock holds its 8x8 blocks in order: luma blocks in raster order,
//! then Cb, then Cr. A block is a run of `(ue(run + 1), ue(level code))`
//! pairs over the zigzag scan terminated by `ue(0)`, where the level code
//! is `2 * (|level| - 1) + (level < 0)`. Samples are level-shifted by 128,
//! transformed by an orthonormal DCT-II rounded to integers, and divided by
//! `step * w` with `w = 1 + 3 ((u + v) / 14)^2`, rounding half away from zero.

mod bits;
mod color;
mod dct;

pub use color::{rgb_to_ycbcr420, ycbcr420_to_rgb, Plane, YCbCr420};

use bits::{ue_len, BitReader, BitWriter};

use crate::error::{Error, Result};
use crate::foveation::{grid_dims, QpDeltaMap};
use crate::frame::Frame;
use crate::round::{round_i64, to_u8};

pub const FVC1_MAGIC: &[u8; 4] = b"FVC1";
pub const MAX_QP: i32 = 102;
pub const DEFAULT_BASE_QP: i32 = 12;
const LEVEL_SHIFT: f64 = 128.0;
const DEAD_ZONE: f64 = 0.5 * (1.0 - 1e-12);

/// Bytes before the QP map.
pub const FIXED_HEADER_LEN: usize = 16;

/// Decoder limits; anything larger is rejected as a format error.
pub const MAX_DIMENSION: u32 = 16384;
pub const MAX_MB_SIZE: u32 = 256;

/// `step(qp) = 1.12^qp` built by repeated multiplication so the table is
/// identical on every platform.
static STEPS: std::sync::LazyLock<[f64; (MAX_QP + 1) as usize]> = std::sync::LazyLock::new(|| {
    let mut t = [1.0f64; (MAX_QP + 1) as usize];
    for i in 1..t.len() {
        t[i] = t[i - 1] * 1.12;
    }
    t
});

/// A quantizer index and its step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerStep {
    pub qp: i32,
    pub step: f64,
}

/// Step size for `qp` in `[0, 102]`: each increment enlarges it by 12%.
pub fn quantize_step(qp: i32) -> Result<QuantizerStep> {
    if !(0..=MAX_QP).contains(&qp) {
        return Err(Error::invalid(format!("qp {qp} outside [0, {MAX_QP}]")));
    }
    Ok(QuantizerStep { qp, step: STEPS[qp as usize] })
}

/// Output of [`encode_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub bitstream: Vec<u8>,
    /// Bits per macroblock in raster order, including alignment padding.
    pub mb_bits: Vec<u32>,
    pub base_qp: i32,
    pub qp_map: QpDeltaMap,
    pub header_bits: u64,
}

impl EncodedFrame {
    pub fn total_bits(&self) -> u64 {
        self.bitstream.len() as u64 * 8
    }
}

/// Fully parsed frame header.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub base_qp: i32,
    pub qp_map: QpDeltaMap,
}

impl Header {
    pub fn len(&self) -> usize {
        FIXED_HEADER_LEN + self.qp_map.deltas().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Decoder output with the side information carried in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub frame: Frame,
    pub base_qp: i32,
    pub qp_map: QpDeltaMap,
}

fn check_mb_size(mb: u32) -> Result<()> {
    if mb == 0 || !mb.is_multiple_of(16) || mb > MAX_MB_SIZE {
        return Err(Error::invalid(format!("macroblock size {mb} must be a positive multiple of 16 up to {MAX_MB_SIZE}")));
    }
    Ok(())
}

struct MbLayout {
    luma_blocks: u32,
    chroma_blocks: u32,
}

impl MbLayout {
    fn new(mb: u32) -> Self {
        Self { luma_blocks: mb / 8, chroma_blocks: mb / 16 }
    }

    fn blocks(&self) -> usize {
        (self.luma_blocks * self.luma_blocks + 2 * self.chroma_blocks * self.chroma_blocks) as usize
    }
}

fn divisors(qp: i32) -> [f64; 64] {
    let step = STEPS[qp as usize];
    std::array::from_fn(|i| step * dct::weight(i))
}

fn effective_qp(base_qp: i32, delta: u8) -> i32 {
    (base_qp + i32::from(delta)).clamp(0, MAX_QP)
}

fn encode_block(w: &mut BitWriter, plane: &Plane, x0: u32, y0: u32, div: &[f64; 64]) {
    let mut block = [0.0f64; 64];
    if x0 + 8 <= plane.width && y0 + 8 <= plane.height {
        for y in 0..8 {
            let row = &plane.data[(y0 + y) as usize * plane.width as usize + x0 as usize..][..8];
            for (dst, &v) in block[y as usize * 8..][..8].iter_mut().zip(row) {
                *dst = f64::from(v) - LEVEL_SHIFT;
            }
        }
    } else {
        for y in 0..8 {
            for x in 0..8 {
                block[(y * 8 + x) as usize] = f64::from(plane.get_clamped(x0 + x, y0 + y)) - LEVEL_SHIFT;
            }
        }
    }
    let coef = dct::forward(&block);
    let mut run = 0u32;
    for &idx in &dct::ZIGZAG {
        let c = f64::from(coef[idx]);
        // Cheap exact pre-test: well inside the dead zone the quotient rounds to zero.
        let level = if c.abs() < div[idx] * DEAD_ZONE { 0 } else { round_i64(c / div[idx]) as i32 };
        if level == 0 {
            run += 1;
            continue;
        }
        w.write_ue(run + 1);
        w.write_ue(level_code(level));
        run = 0;
    }
    w.write_ue(0);
}

fn level_code(level: i32) -> u32 {
    2 * (level.unsigned_abs() - 1) + u32::from(level < 0)
}

/// Encodes one frame with per-macroblock QP offsets.
pub fn encode_frame(frame: &Frame, base_qp: i32, qp_map: &QpDeltaMap) -> Result<EncodedFrame> {
    quantize_step(base_qp)?;
    let mb = qp_map.mb_size();
    check_mb_size(mb)?;
    if !qp_map.fits(frame.width(), frame.height()) {
        return Err(Error::invalid(format!(
            "qp map {}x{} does not match a {}x{} frame with {mb}px macroblocks",
            qp_map.cols(),
            qp_map.rows(),
            frame.width(),
            frame.height()
        )));
    }
    let planes = rgb_to_ycbcr420(frame)?;
    let layout = MbLayout::new(mb);

    let mut w = BitWriter::with_capacity(frame.data().len() / 4);
    w.write_bytes(FVC1_MAGIC);
    w.write_bytes(&frame.width().to_le_bytes());
    w.write_bytes(&frame.height().to_le_bytes());
    w.write_bytes(&(mb as u16).to_le_bytes());
    w.write_bytes(&(base_qp as i16).to_le_bytes());
    w.write_bytes(qp_map.deltas());
    let header_bits = w.bit_len() as u64;

    let mut mb_bits = Vec::with_capacity(qp_map.deltas().len());
    for row in 0..qp_map.rows() {
        for col in 0..qp_map.cols() {
            let start = w.bit_len();
            let div = divisors(effective_qp(base_qp, qp_map.get(col, row)));
            let (lx, ly) = (col * mb, row * mb);
            for by in 0..layout.luma_blocks {
                for bx in 0..layout.luma_blocks {
                    encode_block(&mut w, &planes.y, lx + bx * 8, ly + by * 8, &div);
                }
            }
            let (cx, cy) = (lx / 2, ly / 2);
            for plane in [&planes.cb, &planes.cr] {
                for by in 0..layout.chroma_blocks {
                    for bx in 0..layout.chroma_blocks {
                        encode_block(&mut w, plane, cx + bx * 8, cy + by * 8, &div);
                    }
                }
            }
            w.align();
            mb_bits.push((w.bit_len() - start) as u32);
        }
    }
    Ok(EncodedFrame { bitstream: w.finish(), mb_bits, base_qp, qp_map: qp_map.clone(), header_bits })
}

/// Lower bound on bits for a macroblock whose blocks carry the given
/// nonzero `(run, level)` symbols, one EOB per block and byte alignment.
pub fn symbol_bits(pairs: &[(u32, i32)], blocks: usize) -> u64 {
    let payload: u64 = pairs.iter().map(|&(run, level)| u64::from(ue_len(run + 1) + ue_len(level_code(level)))).sum();
    (payload + blocks as u64).div_ceil(8) * 8
}

/// Number of 8x8 blocks in one macroblock.
pub fn blocks_per_macroblock(mb_size: u32) -> usize {
    MbLayout::new(mb_size).blocks()
}

pub fn parse_header(bitstream: &[u8]) -> Result<Header> {
    if bitstream.len() < 4 || &bitstream[..4] != FVC1_MAGIC {
        return Err(Error::Format("missing FVC1 magic".into()));
    }
    if bitstream.len() < FIXED_HEADER_LEN {
        return Err(Error::Decode { offset: bitstream.len(), reason: "header truncated".into() });
    }
    let width = u32::from_le_bytes(bitstream[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bitstream[8..12].try_into().unwrap());
    let mb = u32::from(u16::from_le_bytes(bitstream[12..14].try_into().unwrap()));
    let base_qp = i32::from(i16::from_le_bytes(bitstream[14..16].try_into().unwrap()));
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(Error::Format(format!("unsupported frame size {width}x{height}")));
    }
    check_mb_size(mb).map_err(|e| Error::Format(e.to_string()))?;
    if !(0..=MAX_QP).contains(&base_qp) {
        return Err(Error::Format(format!("base qp {base_qp} outside [0, {MAX_QP}]")));
    }
    let (cols, rows) = grid_dims(width, height, mb)?;
    let n = cols as usize * rows as usize;
    // Every macroblock needs at least one EOB bit per block.
    let min_mb_bytes = blocks_per_macroblock(mb).div_ceil(8);
    let needed = FIXED_HEADER_LEN + n + n * min_mb_bytes;
    if bitstream.len() < needed {
        return Err(Error::Decode {
            offset: bitstream.len(),
            reason: format!("stream too short for {cols}x{rows} macroblocks (need at least {needed} bytes)"),
        });
    }
    let deltas = bitstream[FIXED_HEADER_LEN..FIXED_HEADER_LEN + n].to_vec();
    let qp_map = QpDeltaMap::from_parts(cols, rows, mb, deltas).map_err(|e| Error::Format(e.to_string()))?;
    Ok(Header { width, height, base_qp, qp_map })
}

fn decode_block(r: &mut BitReader<'_>, plane: &mut Plane, x0: u32, y0: u32, mul: &[f64; 64]) -> Result<()> {
    let mut coef = [0.0f64; 64];
    let mut pos = 0usize;
    let mut nonzero = 0;
    loop {
        let offset = r.byte_offset();
        let sym = r.read_ue()?;
        if sym == 0 {
            break;
        }
        let run = (sym - 1) as usize;
        if run > 63 || pos + run > 63 {
            return Err(Error::Decode { offset, reason: "coefficient run past end of block".into() });
        }
        pos += run;
        let code = r.read_ue()?;
        let magnitude = (code / 2 + 1) as f64;
        let level = if code & 1 == 1 { -magnitude } else { magnitude };
        let idx = dct::ZIGZAG[pos];
        coef[idx] = level * mul[idx];
        nonzero += 1;
        pos += 1;
    }
    let stride = plane.width as usize;
    let origin = y0 as usize * stride + x0 as usize;
    if nonzero == 0 || (nonzero == 1 && coef[0] != 0.0) {
        // Same arithmetic as the full inverse with every AC term zero.
        let v = to_u8(dct::BASIS[0][0] * (dct::BASIS[0][0] * coef[0]) + LEVEL_SHIFT);
        for y in 0..8 {
            plane.data[origin + y * stride..][..8].fill(v);
        }
        return Ok(());
    }
    let samples = dct::inverse(&coef);
    for y in 0..8 {
        let row = &mut plane.data[origin + y * stride..][..8];
        for (dst, &v) in row.iter_mut().zip(&samples[y * 8..y * 8 + 8]) {
            *dst = to_u8(v + LEVEL_SHIFT);
        }
    }
    Ok(())
}

/// Decodes a bitstream, returning the frame and the side information.
pub fn decode(bitstream: &[u8]) -> Result<Decoded> {
    let header = parse_header(bitstream)?;
    let map = &header.qp_map;
    let mb = map.mb_size();
    let layout = MbLayout::new(mb);
    let (pw, ph) = (map.cols() * mb, map.rows() * mb);
    let mut planes = YCbCr420 {
        width: header.width,
        height: header.height,
        y: Plane::new(pw, ph),
        cb: Plane::new(pw / 2, ph / 2),
        cr: Plane::new(pw / 2, ph / 2),
    };
    let mut r = BitReader::new(bitstream, header.len());
    for row in 0..map.rows() {
        for col in 0..map.cols() {
            let qp = effective_qp(header.base_qp, map.get(col, row));
            let mul = divisors(qp);
            let (lx, ly) = (col * mb, row * mb);
            for by in 0..layout.luma_blocks {
                for bx in 0..layout.luma_blocks {
                    decode_block(&mut r, &mut planes.y, lx + bx * 8, ly + by * 8, &mul)?;
                }
            }
            let (cx, cy) = (lx / 2, ly / 2);
            for plane in [&mut planes.cb, &mut planes.cr] {
                for by in 0..layout.chroma_blocks {
                    for bx in 0..layout.chroma_blocks {
                        decode_block(&mut r, plane, cx + bx * 8, cy + by * 8, &mul)?;
                    }
                }
            }
            r.align();
        }
    }
    let frame = ycbcr420_to_rgb(&planes)?;
    Ok(Decoded { frame, base_qp: header.base_qp, qp_map: header.qp_map })
}

pub fn decode_frame(bitstream: &[u8]) -> Result<Frame> {
    decode(bitstream).map(|d| d.frame)
}
