//! Bit-level message encoding.
//!
//! Frame layout: `[u32 nnz][f64 norm, if carried][nnz x (index, entry)]`.
//! Indices take `ceil(log2 d)` bits. Entries are an IEEE double for the
//! identity and sparsifier, a sign bit for the ternary quantizer, and a sign
//! bit plus `ceil(log2 s)` bits of level for the low-precision quantizer.
//! The 32-bit count is framing; the rest of the frame is exactly
//! [`QuantizerSpec::message_bits`] long.

use super::{ceil_log2, level_value, QuantizedMsg, QuantizerSpec};
use crate::error::{Error, Result};
use crate::sparse::SparseVec;

pub const FRAME_HEADER_BITS: u64 = 32;

#[derive(Debug, Default)]
struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    fn push(&mut self, value: u64, width: u64) {
        for b in (0..width).rev() {
            let bit = (value >> b) & 1;
            let byte = (self.len / 8) as usize;
            if byte == self.bytes.len() {
                self.bytes.push(0);
            }
            self.bytes[byte] |= (bit as u8) << (7 - (self.len % 8));
            self.len += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    len: u64,
}

impl BitReader<'_> {
    fn take(&mut self, width: u64) -> Result<u64> {
        if self.pos + width > self.len {
            return Err(Error::Wire("frame truncated".into()));
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }
}

/// An encoded message and its exact length in bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub bytes: Vec<u8>,
    pub total_bits: u64,
}

impl Frame {
    /// Bits after the count header; equals the accounted message cost.
    pub fn payload_bits(&self) -> u64 {
        self.total_bits - FRAME_HEADER_BITS
    }
}

pub fn encode(spec: &QuantizerSpec, msg: &QuantizedMsg) -> Result<Frame> {
    let d = msg.payload.dim();
    let index_bits = ceil_log2(d as u64);
    let mut w = BitWriter::default();
    w.push(msg.nnz as u64, FRAME_HEADER_BITS);
    if spec.carries_norm() {
        w.push(msg.norm.to_bits(), 64);
    }
    for (i, x) in msg.payload.iter() {
        w.push(i as u64, index_bits);
        match spec {
            QuantizerSpec::Identity | QuantizerSpec::Sparsifier { .. } => w.push(x.to_bits(), 64),
            QuantizerSpec::Ternary => w.push(x.is_sign_negative() as u64, 1),
            QuantizerSpec::LowPrecision { levels } => {
                let level = (x.abs() * *levels as f64 / msg.norm).round() as u64;
                if level == 0 || level > *levels as u64 {
                    return Err(Error::Wire(format!(
                        "value {x} is not a level of norm {} with s = {levels}",
                        msg.norm
                    )));
                }
                w.push(x.is_sign_negative() as u64, 1);
                w.push(level - 1, ceil_log2(*levels as u64));
            }
        }
    }
    Ok(Frame {
        bytes: w.bytes,
        total_bits: w.len,
    })
}

/// Decodes a frame into the payload vector of dimension `d`.
pub fn decode(spec: &QuantizerSpec, d: usize, frame: &Frame) -> Result<SparseVec> {
    let mut r = BitReader {
        bytes: &frame.bytes,
        pos: 0,
        len: frame.total_bits,
    };
    let index_bits = ceil_log2(d as u64);
    let nnz = r.take(FRAME_HEADER_BITS)? as usize;
    let norm = if spec.carries_norm() {
        f64::from_bits(r.take(64)?)
    } else {
        0.0
    };
    let mut idx = Vec::with_capacity(nnz);
    let mut val = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        idx.push(r.take(index_bits)? as usize);
        let x = match spec {
            QuantizerSpec::Identity | QuantizerSpec::Sparsifier { .. } => f64::from_bits(r.take(64)?),
            QuantizerSpec::Ternary => {
                let neg = r.take(1)? == 1;
                if neg {
                    -norm
                } else {
                    norm
                }
            }
            QuantizerSpec::LowPrecision { levels } => {
                let sign = if r.take(1)? == 1 { -1.0 } else { 1.0 };
                let level = r.take(ceil_log2(*levels as u64))? as u32 + 1;
                level_value(norm, level, *levels, sign)
            }
        };
        val.push(x);
    }
    if r.pos != r.len {
        return Err(Error::Wire(format!(
            "{} trailing bits in frame",
            r.len - r.pos
        )));
    }
    SparseVec::new(d, idx, val)
}
