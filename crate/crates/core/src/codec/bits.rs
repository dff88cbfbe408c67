//! MSB-first bit packing with order-0 Exp-Golomb codes.

use crate::error::{Error, Result};

/// Longest Exp-Golomb prefix accepted by the reader.
const MAX_PREFIX: u32 = 32;

#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub(crate) fn with_capacity(bytes: usize) -> Self {
        Self { buf: Vec::with_capacity(bytes), acc: 0, nbits: 0 }
    }

    /// Appends raw bytes; the writer must be byte aligned.
    pub(crate) fn write_bytes(&mut self, bytes: &[u8]) {
        debug_assert_eq!(self.nbits, 0);
        self.buf.extend_from_slice(bytes);
    }

    /// Writes the low `n` bits of `value`, `n <= 32`.
    pub(crate) fn write_bits(&mut self, value: u32, n: u32) {
        debug_assert!(n <= 32);
        if n == 0 {
            return;
        }
        self.acc = (self.acc << n) | (u64::from(value) & ((1u64 << n) - 1));
        self.nbits += n;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.buf.push((self.acc >> self.nbits) as u8);
        }
    }

    /// Unsigned Exp-Golomb code for `v`.
    pub(crate) fn write_ue(&mut self, v: u32) {
        let x = u64::from(v) + 1;
        let len = 64 - x.leading_zeros();
        self.write_bits(0, len - 1);
        // `len` may be 33 for v = u32::MAX; split the payload.
        if len > 32 {
            self.write_bits((x >> 32) as u32, len - 32);
            self.write_bits(x as u32, 32);
        } else {
            self.write_bits(x as u32, len);
        }
    }

    /// Zero-pads to the next byte boundary.
    pub(crate) fn align(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.write_bits(0, pad);
        }
    }

    pub(crate) fn bit_len(&self) -> usize {
        self.buf.len() * 8 + self.nbits as usize
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        self.align();
        self.buf
    }
}

/// Number of bits `write_ue(v)` emits.
pub(crate) fn ue_len(v: u32) -> u32 {
    let len = 64 - (u64::from(v) + 1).leading_zeros();
    2 * len - 1
}

pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    /// Reads `data` starting at byte `start`.
    pub(crate) fn new(data: &'a [u8], start: usize) -> Self {
        Self { data, pos: start * 8 }
    }

    pub(crate) fn byte_offset(&self) -> usize {
        self.pos / 8
    }

    fn truncated(&self) -> Error {
        Error::Decode { offset: self.data.len(), reason: "bitstream truncated".into() }
    }

    pub(crate) fn read_bit(&mut self) -> Result<u32> {
        let byte = *self.data.get(self.pos / 8).ok_or_else(|| self.truncated())?;
        let bit = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        Ok(u32::from(bit))
    }

    pub(crate) fn read_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    /// Next 64 bits MSB-first, zero-filled past the end. At least 57 of them
    /// come from the stream position.
    fn peek64(&self) -> u64 {
        let byte = self.pos / 8;
        let mut buf = [0u8; 8];
        if let Some(tail) = self.data.get(byte..) {
            let n = tail.len().min(8);
            buf[..n].copy_from_slice(&tail[..n]);
        }
        u64::from_be_bytes(buf) << (self.pos % 8)
    }

    pub(crate) fn read_ue(&mut self) -> Result<u64> {
        let window = self.peek64();
        let zeros = window.leading_zeros();
        let len = 2 * zeros + 1;
        if len <= 57 && self.pos + len as usize <= self.data.len() * 8 {
            self.pos += len as usize;
            return Ok((window >> (64 - len)) - 1);
        }
        self.read_ue_slow()
    }

    fn read_ue_slow(&mut self) -> Result<u64> {
        let start = self.byte_offset();
        let mut zeros = 0;
        while self.read_bit()? == 0 {
            zeros += 1;
            if zeros > MAX_PREFIX {
                return Err(Error::Decode { offset: start, reason: "Exp-Golomb prefix too long".into() });
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok(((1u64 << zeros) | rest) - 1)
    }

    pub(crate) fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}
