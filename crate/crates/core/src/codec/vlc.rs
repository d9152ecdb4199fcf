//! Variable-length coding of non-negative integer codes.
//!
//! Codes are cut into blocks of [`BLOCK`]. Each block starts with a byte
//! `mode << 6 | param` and continues with a bit stream (LSB first, padded to
//! a byte). The encoder picks whichever mode is shortest for that block:
//!
//! | mode | param | body |
//! |------|-------|------|
//! | 0 | width `w < 64` | every code in `w` bits |
//! | 1 | Rice `k` | every code as unary `c >> k` then `k` low bits |
//! | 2 | Rice `k` | one bit per code marking nonzeros, then `c - 1` Rice-coded for each nonzero |
//! | 3 | 0 | every code in 64 bits |
//!
//! Unary quotients are written as that many zero bits followed by a one.

use crate::error::{Error, Result};

/// Codes per block.
pub(crate) const BLOCK: usize = 64;

const MODE_PACK: u8 = 0;
const MODE_RICE: u8 = 1;
const MODE_SPARSE: u8 = 2;
const MODE_WIDE: u8 = 3;

fn width(c: u64) -> u32 {
    64 - c.leading_zeros()
}

fn rice_bits(codes: impl Iterator<Item = u64> + Clone, k: u32) -> u64 {
    codes.map(|c| 1 + u64::from(k) + (c >> k)).fold(0u64, u64::saturating_add)
}

/// Best Rice parameter near `log2(mean)`, with its cost in bits.
fn best_rice(codes: impl Iterator<Item = u64> + Clone) -> (u32, u64) {
    let (count, sum) = codes.clone().fold((0u64, 0u128), |(n, s), c| (n + 1, s + u128::from(c)));
    if count == 0 {
        return (0, 0);
    }
    let mean = (sum / u128::from(count)) as u64;
    let centre = width(mean).saturating_sub(1);
    (centre.saturating_sub(2)..=(centre + 2).min(63))
        .map(|k| (k, rice_bits(codes.clone(), k)))
        .min_by_key(|&(_, bits)| bits)
        .expect("nonempty range")
}

struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    acc: u64,
    bits: u32,
}

impl<'a> BitWriter<'a> {
    fn new(out: &'a mut Vec<u8>) -> Self {
        Self { out, acc: 0, bits: 0 }
    }

    fn put(&mut self, value: u64, n: u32) {
        if n == 0 {
            return;
        }
        let value = if n == 64 { value } else { value & ((1u64 << n) - 1) };
        let acc = u128::from(self.acc) | u128::from(value) << self.bits;
        let mut bits = self.bits + n;
        let mut acc = acc;
        while bits >= 8 {
            self.out.push(acc as u8);
            acc >>= 8;
            bits -= 8;
        }
        self.acc = acc as u64;
        self.bits = bits;
    }

    fn unary(&mut self, mut q: u64) {
        while q >= 32 {
            self.put(0, 32);
            q -= 32;
        }
        self.put(1 << q, q as u32 + 1);
    }

    fn rice(&mut self, c: u64, k: u32) {
        self.unary(c >> k);
        self.put(c, k);
    }

    fn finish(self) {
        if self.bits > 0 {
            self.out.push(self.acc as u8);
        }
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    /// Position in bits.
    pos: usize,
}

fn truncated() -> Error {
    Error::CorruptPayload("code stream truncated".into())
}

impl<'a> BitReader<'a> {
    fn bit(&mut self) -> Result<bool> {
        let byte = *self.data.get(self.pos / 8).ok_or_else(truncated)?;
        let b = byte >> (self.pos % 8) & 1 == 1;
        self.pos += 1;
        Ok(b)
    }

    fn get(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        let mut filled = 0u32;
        while filled < n {
            let byte = *self.data.get(self.pos / 8).ok_or_else(truncated)?;
            let offset = (self.pos % 8) as u32;
            let take = (8 - offset).min(n - filled);
            let chunk = u64::from(byte >> offset) & ((1u64 << take) - 1);
            v |= chunk << filled;
            filled += take;
            self.pos += take as usize;
        }
        Ok(v)
    }

    /// Reads a Rice code, refusing anything above `max`.
    fn rice(&mut self, k: u32, max: u64) -> Result<u64> {
        let limit = max >> k;
        let mut q = 0u64;
        while !self.bit()? {
            q += 1;
            if q > limit {
                return Err(Error::CorruptPayload("rice code exceeds the code width".into()));
            }
        }
        let c = q << k | self.get(k)?;
        if c > max {
            return Err(Error::CorruptPayload("rice code exceeds the code width".into()));
        }
        Ok(c)
    }

    fn byte_end(&self) -> usize {
        self.pos.div_ceil(8)
    }
}

/// Upper bound on the encoded length of `n` codes no wider than `max_width`.
pub(crate) fn max_encoded_len(n: usize, max_width: u32) -> Option<usize> {
    let body = n.checked_mul(max_width as usize)?.div_ceil(8);
    body.checked_add(n.div_ceil(BLOCK))
}

pub(crate) fn encode(codes: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(codes.len() + codes.len() / BLOCK + 1);
    for block in codes.chunks(BLOCK) {
        let len = block.len() as u64;
        let w = width(block.iter().fold(0, |acc, &c| acc | c));
        let packed = len * u64::from(w);
        let (rice_k, rice) = best_rice(block.iter().copied());
        let nonzero = block.iter().filter(|&&c| c != 0).map(|&c| c - 1);
        let (sparse_k, sparse) = best_rice(nonzero);
        let sparse = sparse.saturating_add(len);

        let mode = if packed <= rice && packed <= sparse {
            if w == 64 {
                MODE_WIDE
            } else {
                MODE_PACK
            }
        } else if rice <= sparse {
            MODE_RICE
        } else {
            MODE_SPARSE
        };
        let param = match mode {
            MODE_PACK => w,
            MODE_RICE => rice_k,
            MODE_SPARSE => sparse_k,
            _ => 0,
        };
        out.push(mode << 6 | param as u8);
        let mut bw = BitWriter::new(&mut out);
        match mode {
            MODE_PACK | MODE_WIDE => block.iter().for_each(|&c| bw.put(c, w)),
            MODE_RICE => block.iter().for_each(|&c| bw.rice(c, rice_k)),
            _ => {
                block.iter().for_each(|&c| bw.put(u64::from(c != 0), 1));
                block.iter().filter(|&&c| c != 0).for_each(|&c| bw.rice(c - 1, sparse_k));
            }
        }
        bw.finish();
    }
    out
}

/// Decodes exactly `n` codes, none wider than `width_limit` bits, and
/// rejects trailing bytes.
pub(crate) fn decode(data: &[u8], n: usize, width_limit: u32) -> Result<Vec<u64>> {
    let max = if width_limit >= 64 { u64::MAX } else { (1u64 << width_limit) - 1 };
    let mut codes = Vec::with_capacity(n.min(data.len().saturating_mul(8)));
    let mut pos = 0;
    while codes.len() < n {
        let len = BLOCK.min(n - codes.len());
        let head = *data.get(pos).ok_or_else(truncated)?;
        let (mode, param) = (head >> 6, u32::from(head & 0x3f));
        let mut br = BitReader { data: &data[pos + 1..], pos: 0 };
        match mode {
            MODE_PACK | MODE_WIDE => {
                let w = if mode == MODE_WIDE {
                    if param != 0 {
                        return Err(Error::CorruptPayload(format!("bad block header {head:#x}")));
                    }
                    64
                } else {
                    param
                };
                if w > width_limit {
                    return Err(Error::CorruptPayload(format!("code width {w} exceeds {width_limit}")));
                }
                for _ in 0..len {
                    codes.push(br.get(w)?);
                }
            }
            MODE_RICE => {
                for _ in 0..len {
                    codes.push(br.rice(param, max)?);
                }
            }
            _ => {
                let start = codes.len();
                for _ in 0..len {
                    codes.push(u64::from(br.bit()?));
                }
                for c in &mut codes[start..] {
                    if *c != 0 {
                        // c - 1 ≤ max - 1 keeps the sum in range
                        *c = br.rice(param, max - 1)? + 1;
                    }
                }
            }
        }
        pos += 1 + br.byte_end();
    }
    if pos != data.len() {
        return Err(Error::CorruptPayload(format!("{} trailing code bytes", data.len() - pos)));
    }
    Ok(codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_width() {
        for w in 0..=64u32 {
            let max = if w == 64 { u64::MAX } else { (1u64 << w).wrapping_sub(1) };
            for n in [0, 1, 63, 64, 65, 200] {
                let codes: Vec<u64> = (0..n as u64).map(|i| if i % 3 == 0 { max } else { i & max }).collect();
                let enc = encode(&codes);
                assert!(enc.len() <= max_encoded_len(n, 64).unwrap());
                assert_eq!(decode(&enc, n, 64).unwrap(), codes, "w {w} n {n}");
            }
        }
    }

    #[test]
    fn round_trips_skewed_blocks() {
        let mut codes = vec![0u64; 300];
        codes[5] = 1;
        codes[70] = 1 << 31;
        codes.extend((0..200).map(|i| (i * 7919 % 13) as u64));
        codes.extend((0..200).map(|i| if i % 9 == 0 { 100 + i } else { 0 }));
        let enc = encode(&codes);
        assert_eq!(decode(&enc, codes.len(), 32).unwrap(), codes);
    }

    #[test]
    fn picks_cheapest_mode() {
        // 64 codes of width 7, near uniform: fixed width wins
        let flat: Vec<u64> = (0..64).map(|i| 64 + i).collect();
        let enc = encode(&flat);
        assert_eq!(enc[0], 7);
        assert_eq!(enc.len(), 57);
        // all zero: width 0, header only
        assert_eq!(encode(&[0; 130]), [0, 0, 0]);
        // one large outlier among small codes: rice
        let mut spiky = vec![1u64; 64];
        spiky[3] = 200;
        assert_eq!(encode(&spiky)[0] >> 6, MODE_RICE);
        // mostly zero: sparse
        let mut sparse = vec![0u64; 64];
        sparse[10] = 40;
        sparse[50] = 33;
        assert_eq!(encode(&sparse)[0] >> 6, MODE_SPARSE);
    }

    #[test]
    fn rejects_malformed_streams() {
        assert!(decode(&[33], 1, 32).is_err());
        assert!(decode(&[8], 1, 32).is_err());
        assert!(decode(&[0, 0], 1, 32).is_err());
        assert!(decode(&[], 1, 32).is_err());
        assert!(decode(&[MODE_WIDE << 6 | 1], 1, 64).is_err());
        // rice k = 0 with an endless run of zero bits
        assert!(decode(&[MODE_RICE << 6, 0, 0, 0, 0, 0], 1, 32).is_err());
        // a 33-bit value under a 32-bit limit
        let wide = encode(&[1 << 32]);
        assert!(decode(&wide, 1, 32).is_err());
    }
}
