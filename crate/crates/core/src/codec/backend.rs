//! Lossless byte stage applied after quantization.

use crate::error::{Error, Result};

pub const BACKEND_ZERO_RLE: u8 = 0;
pub const BACKEND_RAW: u8 = 1;
/// Marks payloads whose stream is produced by an external program.
pub const BACKEND_OPAQUE: u8 = 0xff;

/// A lossless byte transform identified by a one-byte id in the payload
/// header. `decompress` receives the exact expected output length.
pub trait LosslessBackend: Send + Sync {
    fn id(&self) -> u8;
    fn compress(&self, input: &[u8]) -> Vec<u8>;
    fn decompress(&self, input: &[u8], expected_len: usize) -> Result<Vec<u8>>;
}

/// Identity transform.
#[derive(Debug, Default, Clone, Copy)]
pub struct Raw;

impl LosslessBackend for Raw {
    fn id(&self) -> u8 {
        BACKEND_RAW
    }

    fn compress(&self, input: &[u8]) -> Vec<u8> {
        input.to_vec()
    }

    fn decompress(&self, input: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        if input.len() != expected_len {
            return Err(Error::CorruptPayload(format!(
                "raw stream has {} bytes, expected {expected_len}",
                input.len()
            )));
        }
        Ok(input.to_vec())
    }
}

const MODE_STORED: u8 = 0;
const MODE_ZERO_RUNS: u8 = 1;

/// Zero-run-length coding: nonzero bytes are copied, each run of zeros
/// becomes `0x00` followed by the LEB128 run length. A leading mode byte
/// selects stored mode whenever run coding would expand the input, so the
/// output never exceeds the input by more than one byte. Empty input
/// encodes to empty output.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroRle;

impl LosslessBackend for ZeroRle {
    fn id(&self) -> u8 {
        BACKEND_ZERO_RLE
    }

    fn compress(&self, input: &[u8]) -> Vec<u8> {
        if input.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(input.len() / 2 + 8);
        out.push(MODE_ZERO_RUNS);
        let mut i = 0;
        while i < input.len() {
            if input[i] != 0 {
                out.push(input[i]);
                i += 1;
                if out.len() > input.len() {
                    break;
                }
                continue;
            }
            let start = i;
            while i < input.len() && input[i] == 0 {
                i += 1;
            }
            out.push(0);
            write_varint(&mut out, (i - start) as u64);
            if out.len() > input.len() {
                break;
            }
        }
        if out.len() > input.len() {
            let mut stored = Vec::with_capacity(input.len() + 1);
            stored.push(MODE_STORED);
            stored.extend_from_slice(input);
            return stored;
        }
        out
    }

    fn decompress(&self, input: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        let Some((&mode, body)) = input.split_first() else {
            if expected_len == 0 {
                return Ok(Vec::new());
            }
            return Err(Error::CorruptPayload("empty stream".into()));
        };
        let out = match mode {
            MODE_STORED => body.to_vec(),
            MODE_ZERO_RUNS => {
                let mut out = Vec::with_capacity(expected_len.min(1 << 24));
                let mut pos = 0;
                while pos < body.len() {
                    let b = body[pos];
                    pos += 1;
                    if b != 0 {
                        out.push(b);
                    } else {
                        let run = read_varint(body, &mut pos)?;
                        let run = usize::try_from(run)
                            .ok()
                            .filter(|&r| r > 0 && r <= expected_len.saturating_sub(out.len()))
                            .ok_or_else(|| Error::CorruptPayload(format!("bad zero run {run}")))?;
                        out.resize(out.len() + run, 0);
                    }
                    if out.len() > expected_len {
                        break;
                    }
                }
                out
            }
            other => return Err(Error::CorruptPayload(format!("unknown zero-rle mode {other}"))),
        };
        if out.len() != expected_len {
            return Err(Error::CorruptPayload(format!(
                "stream decodes to {} bytes, expected {expected_len}",
                out.len()
            )));
        }
        Ok(out)
    }
}

pub(crate) fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub(crate) fn read_varint(buf: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *buf
            .get(*pos)
            .ok_or_else(|| Error::CorruptPayload("truncated varint".into()))?;
        *pos += 1;
        v |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::CorruptPayload("varint longer than 64 bits".into()))
}
