//! Little-endian primitives shared by the binary snapshot formats.
//!
//! Every snapshot starts with a 4-byte magic and a `u32` format version.
//! Lengths are `u64`. The reader checks each length against the bytes that
//! remain before allocating, so truncated or hostile input fails cleanly.

use crate::error::{Error, Result};

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 4], version: u32) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(magic);
        let mut enc = Encoder { buf };
        enc.u32(version);
        enc
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64_slice(&mut self, values: &[f64]) {
        self.buf.reserve(values.len() * 8);
        for &v in values {
            self.f64(v);
        }
    }

    pub fn usize_slice(&mut self, values: &[usize]) {
        self.buf.reserve(values.len() * 8);
        for &v in values {
            self.usize(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    format: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Checks magic and version, returning a decoder positioned after them.
    pub fn open(format: &'static str, bytes: &'a [u8], magic: &[u8; 4], version: u32) -> Result<Self> {
        let mut dec = Decoder { format, bytes, pos: 0 };
        let head = dec.take(4)?;
        if head != magic {
            return Err(dec.err("bad magic"));
        }
        let found = dec.u32()?;
        if found != version {
            return Err(dec.err(format!("unsupported version {found} (expected {version})")));
        }
        Ok(dec)
    }

    pub fn err(&self, message: impl Into<String>) -> Error {
        Error::decode(self.format, format!("{} at byte {}", message.into(), self.pos))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| self.err("unexpected end of input"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.err("length overflows usize"))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// A count of items, each at least `item_bytes` long on the wire.
    pub fn count(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        self.check_fits(n, item_bytes)?;
        Ok(n)
    }

    pub fn check_fits(&self, n: usize, item_bytes: usize) -> Result<()> {
        match n.checked_mul(item_bytes) {
            Some(total) if total <= self.remaining() => Ok(()),
            _ => Err(self.err(format!("declared length {n} exceeds input"))),
        }
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.err("invalid utf-8 in string"))
    }

    pub fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        self.check_fits(n, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn usize_vec(&mut self, n: usize) -> Result<Vec<usize>> {
        self.check_fits(n, 8)?;
        (0..n).map(|_| self.usize()).collect()
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.err(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_oversized_length_without_allocating() {
        let mut enc = Encoder::new(b"TEST", 1);
        enc.u64(u64::MAX / 2);
        let bytes = enc.finish();
        let mut dec = Decoder::open("test", &bytes, b"TEST", 1).unwrap();
        assert!(dec.count(8).is_err());
    }

    #[test]
    fn version_mismatch_is_reported() {
        let bytes = Encoder::new(b"TEST", 2).finish();
        let err = Decoder::open("test", &bytes, b"TEST", 1).err().unwrap();
        assert!(err.to_string().contains("unsupported version 2"));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut enc = Encoder::new(b"TEST", 1);
        enc.u8(7);
        let bytes = enc.finish();
        let dec = Decoder::open("test", &bytes, b"TEST", 1).unwrap();
        assert!(dec.finish().is_err());
    }
}
