//! Little-endian primitives shared by every on-disk format.

use crate::error::{Error, Result};

pub(crate) fn put_u8(out: &mut Vec<u8>, v: u8) {
    out.push(v);
}

pub(crate) fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Cursor over a byte slice. `err` builds the error reported on underflow so
/// file parsers and payload decoders can report their own variant.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    err: fn(String) -> Error,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8], err: fn(String) -> Error) -> Self {
        Self { buf, pos: 0, err }
    }

    pub(crate) fn for_file(buf: &'a [u8]) -> Self {
        Self::new(buf, Error::MalformedFile)
    }

    pub(crate) fn for_payload(buf: &'a [u8]) -> Self {
        Self::new(buf, Error::CorruptPayload)
    }

    pub(crate) fn fail(&self, msg: impl Into<String>) -> Error {
        (self.err)(msg.into())
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.fail(format!(
                "truncated at byte {}: wanted {n}, have {}",
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A u64 element count that must fit the bytes still available at
    /// `elem_size` bytes apiece, so corrupt counts fail before allocating.
    pub(crate) fn count(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let fits = usize::try_from(n)
            .ok()
            .and_then(|n| n.checked_mul(elem_size))
            .is_some_and(|bytes| bytes <= self.remaining());
        if !fits {
            return Err(self.fail(format!("count {n} exceeds remaining input")));
        }
        Ok(n as usize)
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != expected {
            return Err(self.fail(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(self.fail(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}
