//! MSB-first bit writer and reader.

use crate::error::{CodecError, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn write_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Writes the low `count` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 64);
        for i in (0..count).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// `q` ones followed by a terminating zero.
    pub fn write_unary(&mut self, q: u64) {
        for _ in 0..q {
            self.write_bit(true);
        }
        self.write_bit(false);
    }

    /// Order-0 exponential Golomb code of `value`.
    pub fn write_exp_golomb(&mut self, value: u64) {
        let v = value + 1;
        let width = 64 - v.leading_zeros();
        self.write_bits(0, width - 1);
        self.write_bits(v, width);
    }

    /// Little-endian base-128 groups, each prefixed by a continuation bit.
    pub fn write_varint(&mut self, mut value: u32) {
        loop {
            let group = value & 0x7f;
            value >>= 7;
            self.write_bit(value != 0);
            self.write_bits(u64::from(group), 7);
            if value == 0 {
                break;
            }
        }
    }

    pub fn append(&mut self, other: &BitWriter) {
        let mut reader = BitReader::new(&other.bytes);
        for _ in 0..other.len {
            // cannot fail: reading inside `other.len`
            let bit = reader.read_bit().unwrap_or(false);
            self.write_bit(bit);
        }
    }

    /// Bits as a `'0'`/`'1'` string, handy in tests and golden vectors.
    pub fn to_bit_string(&self) -> String {
        let mut reader = BitReader::new(&self.bytes);
        (0..self.len).map(|_| if reader.read_bit().unwrap_or(false) { '1' } else { '0' }).collect()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Finished byte buffer, zero-padded to the next byte boundary.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    limit: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0, limit: bytes.len() * 8 }
    }

    /// Reader over the first `bit_len` bits of `bytes`.
    pub fn with_len(bytes: &'a [u8], bit_len: usize) -> Self {
        Self { bytes, pos: 0, limit: bit_len.min(bytes.len() * 8) }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.pos
    }

    fn truncated(&self, what: &str) -> CodecError {
        CodecError::Bitstream { bit_offset: self.pos, reason: format!("truncated while reading {what}") }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.limit {
            return Err(self.truncated("bit"));
        }
        let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        if self.remaining() < count as usize {
            return Err(self.truncated("fixed-width field"));
        }
        let mut value = 0u64;
        for _ in 0..count {
            value = (value << 1) | u64::from(self.read_bit()?);
        }
        Ok(value)
    }

    pub fn read_unary(&mut self) -> Result<u64> {
        let mut q = 0u64;
        loop {
            if self.pos >= self.limit {
                return Err(self.truncated("unary quotient"));
            }
            if !self.read_bit()? {
                return Ok(q);
            }
            q += 1;
        }
    }

    pub fn read_exp_golomb(&mut self) -> Result<u64> {
        let start = self.pos;
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(CodecError::Bitstream { bit_offset: start, reason: "exp-golomb prefix too long".into() });
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok(((1u64 << zeros) | rest) - 1)
    }

    pub fn read_varint(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut value = 0u64;
        let mut shift = 0;
        loop {
            let more = self.read_bit()?;
            let group = self.read_bits(7)?;
            value |= group << shift;
            shift += 7;
            if !more {
                break;
            }
            if shift >= 35 {
                return Err(CodecError::Bitstream { bit_offset: start, reason: "varint overflow".into() });
            }
        }
        u32::try_from(value)
            .map_err(|_| CodecError::Bitstream { bit_offset: start, reason: "varint exceeds 32 bits".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_are_msb_first() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.write_unary(2);
        assert_eq!(w.to_bit_string(), "101110");
        assert_eq!(w.as_bytes(), &[0b1011_1000]);
    }

    #[test]
    fn exp_golomb_and_varint_round_trip() {
        let mut w = BitWriter::new();
        for v in [0u64, 1, 2, 7, 8, 1000, 1 << 40] {
            w.write_exp_golomb(v);
        }
        for v in [0u32, 127, 128, 300, u32::MAX] {
            w.write_varint(v);
        }
        let bytes = w.clone().into_bytes();
        let mut r = BitReader::with_len(&bytes, w.len());
        for v in [0u64, 1, 2, 7, 8, 1000, 1 << 40] {
            assert_eq!(r.read_exp_golomb().unwrap(), v);
        }
        for v in [0u32, 127, 128, 300, u32::MAX] {
            assert_eq!(r.read_varint().unwrap(), v);
        }
        assert_eq!(r.remaining(), 0);
    }

    #[test]
    fn truncated_read_reports_offset() {
        let bytes = [0xffu8];
        let mut r = BitReader::new(&bytes);
        let err = r.read_unary().unwrap_err();
        assert_eq!(
            err,
            CodecError::Bitstream { bit_offset: 8, reason: "truncated while reading unary quotient".into() }
        );
    }
}
