//! `NKPM` parameter files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "NKPM" | version: u8 | layer_count: u32 | seed: u64
//! per layer:
//!   activation: u8 (0 = relu, 1 = identity)
//!   weights: rows u32 | cols u32 | rows*cols f64 (row-major)
//!   bias:    1 u32    | cols u32 | cols f64
//! crc32 (IEEE) of every preceding byte: u32
//! ```

use std::io::{Read, Write};

use super::{network::Activation, Layer, Matrix, ParameterSet};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NKPM";
pub const VERSION: u8 = 1;

fn put_block(buf: &mut Vec<u8>, rows: usize, cols: usize, values: &[f64]) {
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(params: &ParameterSet) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    buf.extend_from_slice(&params.seed.to_le_bytes());
    for l in &params.layers {
        buf.push(l.activation.code());
        put_block(&mut buf, l.weights.rows(), l.weights.cols(), l.weights.data());
        put_block(&mut buf, 1, l.bias.len(), &l.bias);
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated NKPM file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn block(&mut self) -> Result<Matrix> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= self.bytes.len()))
            .ok_or_else(|| Error::Format("block size out of range".into()))?;
        let raw = self.take(n * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn decode(bytes: &[u8]) -> Result<ParameterSet> {
    if bytes.len() < MAGIC.len() + 1 + 4 + 8 + 4 {
        return Err(Error::Format("file too short for NKPM".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Format("NKPM checksum mismatch".into()));
    }
    let mut cur = Cursor { bytes: body, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad NKPM magic".into()));
    }
    let version = cur.u8()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported NKPM version {version}")));
    }
    let count = cur.u32()? as usize;
    let seed = cur.u64()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let activation = Activation::from_code(cur.u8()?)
            .ok_or_else(|| Error::Format(format!("layer {i}: unknown activation")))?;
        let weights = cur.block()?;
        let bias = cur.block()?;
        if bias.rows() != 1 || bias.cols() != weights.cols() {
            return Err(Error::Format(format!("layer {i}: bias shape mismatch")));
        }
        layers.push(Layer {
            weights,
            bias: bias.data().to_vec(),
            activation,
        });
    }
    if cur.pos != body.len() {
        return Err(Error::Format("trailing bytes after last layer".into()));
    }
    for (i, w) in layers.windows(2).enumerate() {
        if w[0].weights.cols() != w[1].weights.rows() {
            return Err(Error::Format(format!("layer {i} does not chain into layer {}", i + 1)));
        }
    }
    if layers.is_empty() {
        return Err(Error::Format("NKPM file holds no layers".into()));
    }
    Ok(ParameterSet { layers, seed })
}

pub fn write_params<W: Write>(params: &ParameterSet, mut w: W) -> Result<()> {
    w.write_all(&encode(params))?;
    Ok(())
}

pub fn read_params<R: Read>(mut r: R) -> Result<ParameterSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}
