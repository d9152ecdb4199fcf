//! Built-in predictor + uniform scalar quantizer.
//!
//! Each value is predicted from already *reconstructed* neighbours, the
//! prediction error is quantized with bin width `2τ`, and the decoder
//! replays exactly the same arithmetic. Values whose quantized
//! reconstruction would miss the bound (or whose bin index leaves the i32
//! range) are stored verbatim as escapes.
//!
//! With `τ = 0` the quantizer is replaced by an exact XOR of the value's
//! bit pattern with the prediction's.

use crate::error::{Error, Result};
use crate::mesh_core::strides_of;

use super::{vlc, Predictor};

/// Inclusion-exclusion Lorenzo stencil over a row-major array whose last
/// axis varies fastest.
pub(crate) struct Stencil {
    shape: Vec<usize>,
    /// (linear offset, axis mask, sign) per nonempty subset of axes.
    terms: Vec<(usize, u32, f64)>,
}

impl Stencil {
    pub(crate) fn new(predictor: Predictor, shape: &[usize]) -> Self {
        let shape: Vec<usize> = match predictor {
            Predictor::LorenzoNd => shape.to_vec(),
            // previous value along the flattened array
            Predictor::Lorenzo1d => vec![shape.iter().product()],
            Predictor::None => vec![shape.iter().product()],
        };
        let terms = if predictor == Predictor::None {
            Vec::new()
        } else {
            let strides = strides_of(&shape);
            let dim = shape.len();
            (1u32..(1 << dim))
                .map(|mask| {
                    let offset = (0..dim).filter(|d| mask >> d & 1 == 1).map(|d| strides[d]).sum();
                    let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                    (offset, mask, sign)
                })
                .collect()
        };
        Self { shape, terms }
    }

    /// Walks the array in storage order, handing `visit` each linear index
    /// and its prediction from the values reconstructed so far.
    pub(crate) fn walk(&self, recon: &mut [f64], mut visit: impl FnMut(usize, f64, &mut [f64]) -> Result<()>) -> Result<()> {
        let dim = self.shape.len();
        let mut idx = vec![0usize; dim];
        for i in 0..recon.len() {
            // axes with a predecessor available
            let mut avail = 0u32;
            for (d, &k) in idx.iter().enumerate() {
                if k > 0 {
                    avail |= 1 << d;
                }
            }
            let mut pred = 0.0;
            for &(offset, mask, sign) in &self.terms {
                if mask & avail == mask {
                    pred += sign * recon[i - offset];
                }
            }
            // Non-finite sums carry platform-specific NaN bits.
            if !pred.is_finite() {
                pred = 0.0;
            }
            visit(i, pred, recon)?;
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < self.shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(())
    }
}

/// Pre-backend streams and reconstruction produced by [`encode`].
pub(crate) struct Quantized {
    /// Variable-length coded integer codes.
    pub codes: Vec<u8>,
    /// `(index u64, value f64)` records for escaped values.
    pub escape_records: Vec<u8>,
    pub escapes: u64,
    pub recon: Vec<f64>,
}

pub(crate) const ESCAPE_RECORD: usize = 16;
fn zigzag(q: i32) -> u32 {
    ((q << 1) ^ (q >> 31)) as u32
}

fn unzigzag(z: u32) -> i32 {
    ((z >> 1) as i32) ^ -((z & 1) as i32)
}

#[inline]
fn dequantize(pred: f64, q: f64, two_tau: f64) -> f64 {
    pred + q * two_tau
}

/// Widest code in bits: zigzag differences, or XOR words when lossless.
pub(crate) fn max_width(tau: f64) -> u32 {
    if tau == 0.0 {
        64
    } else {
        32
    }
}

/// Upper bound on the coded stream for `n` values.
pub(crate) fn max_packed_len(n: usize, tau: f64) -> Option<usize> {
    vlc::max_encoded_len(n, max_width(tau))
}

pub(crate) fn encode(values: &[f64], shape: &[usize], predictor: Predictor, tau: f64) -> Result<Quantized> {
    let n = values.len();
    let stencil = Stencil::new(predictor, shape);
    let mut recon = vec![0.0; n];
    let mut codes = vec![0u64; n];

    if tau == 0.0 {
        stencil.walk(&mut recon, |i, pred, recon| {
            codes[i] = values[i].to_bits() ^ pred.to_bits();
            recon[i] = values[i];
            Ok(())
        })?;
        return Ok(Quantized { codes: vlc::encode(&codes), escape_records: Vec::new(), escapes: 0, recon });
    }

    let two_tau = 2.0 * tau;
    let mut escape_records = Vec::new();
    let mut escapes = 0u64;
    stencil.walk(&mut recon, |i, pred, recon| {
        let v = values[i];
        let q = ((v - pred) / two_tau).round();
        if q.is_finite() && q.abs() <= i32::MAX as f64 {
            let r = dequantize(pred, q, two_tau);
            if (v - r).abs() <= tau {
                codes[i] = u64::from(zigzag(q as i32));
                recon[i] = r;
                return Ok(());
            }
        }
        escape_records.extend_from_slice(&(i as u64).to_le_bytes());
        escape_records.extend_from_slice(&v.to_le_bytes());
        escapes += 1;
        recon[i] = v;
        Ok(())
    })?;
    Ok(Quantized { codes: vlc::encode(&codes), escape_records, escapes, recon })
}

pub(crate) fn decode(
    packed: &[u8],
    records: &[u8],
    n: usize,
    shape: &[usize],
    predictor: Predictor,
    tau: f64,
    escapes: u64,
) -> Result<Vec<f64>> {
    let expect = usize::try_from(escapes)
        .ok()
        .and_then(|e| e.checked_mul(ESCAPE_RECORD))
        .ok_or_else(|| Error::CorruptPayload("escape count overflows".into()))?;
    if records.len() != expect {
        return Err(Error::CorruptPayload(format!("escape block has {} bytes, expected {expect}", records.len())));
    }
    let codes = vlc::decode(packed, n, max_width(tau))?;
    let stencil = Stencil::new(predictor, shape);
    let mut recon = vec![0.0; n];

    if tau == 0.0 {
        stencil.walk(&mut recon, |i, pred, recon| {
            recon[i] = f64::from_bits(codes[i] ^ pred.to_bits());
            Ok(())
        })?;
        return Ok(recon);
    }

    let two_tau = 2.0 * tau;
    let escape_at = |k: usize| -> (u64, f64) {
        let r = &records[k * ESCAPE_RECORD..(k + 1) * ESCAPE_RECORD];
        (
            u64::from_le_bytes(r[..8].try_into().unwrap()),
            f64::from_le_bytes(r[8..].try_into().unwrap()),
        )
    };
    let total = escapes as usize;
    let mut next = 0usize;
    let mut last_escape: Option<u64> = None;
    stencil.walk(&mut recon, |i, pred, recon| {
        if next < total {
            let (at, v) = escape_at(next);
            if last_escape.is_some_and(|l| at <= l) || at >= n as u64 {
                return Err(Error::CorruptPayload(format!("escape index {at} out of order")));
            }
            if at == i as u64 {
                recon[i] = v;
                next += 1;
                last_escape = Some(at);
                return Ok(());
            }
        }
        recon[i] = dequantize(pred, f64::from(unzigzag(codes[i] as u32)), two_tau);
        Ok(())
    })?;
    if next != total {
        return Err(Error::CorruptPayload(format!("{} escapes unused", total - next)));
    }
    Ok(recon)
}
