//! Error-bounded codecs and the registry that dispatches between them.
//!
//! Every encoded component is self-describing: its payload starts with a
//! header naming the codec, predictor, lossless backend, bound and shape,
//! so [`CodecRegistry::decode`] needs nothing else.

mod backend;
mod external;
mod quantize;
mod vlc;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use backend::{LosslessBackend, Raw, ZeroRle, BACKEND_OPAQUE, BACKEND_RAW, BACKEND_ZERO_RLE};
pub use external::ExternalCodec;

use crate::binio::{put_f64, put_u64, put_u8, Reader};
use crate::error::{Error, Result};

pub const CODEC_BUILTIN_PQ: u8 = 0;
pub const CODEC_VERBATIM: u8 = 1;
/// Lowest id available to external codecs.
pub const CODEC_EXTERNAL_MIN: u8 = 128;

const MAX_DIMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predictor {
    None,
    /// Previous value in storage order.
    Lorenzo1d,
    /// Inclusion-exclusion stencil over the array shape.
    LorenzoNd,
}

impl Predictor {
    pub fn id(self) -> u8 {
        match self {
            Predictor::None => 0,
            Predictor::Lorenzo1d => 1,
            Predictor::LorenzoNd => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Predictor::None),
            1 => Ok(Predictor::Lorenzo1d),
            2 => Ok(Predictor::LorenzoNd),
            other => Err(Error::CorruptPayload(format!("unknown predictor {other}"))),
        }
    }
}

/// How one array is to be encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecSpec {
    pub codec_id: u8,
    pub predictor: Predictor,
    /// Row-major shape; its product is the element count.
    pub dims: Vec<usize>,
    /// Absolute pointwise bound; 0 requests bitwise lossless coding.
    pub tau_abs: f64,
    pub backend_id: u8,
}

impl CodecSpec {
    /// Built-in codec with previous-value prediction over a flat array.
    pub fn sequence(n: usize, tau_abs: f64) -> Self {
        Self {
            codec_id: CODEC_BUILTIN_PQ,
            predictor: Predictor::Lorenzo1d,
            dims: vec![n],
            tau_abs,
            backend_id: BACKEND_ZERO_RLE,
        }
    }

    /// Built-in codec with the N-D stencil over `shape`.
    pub fn grid(shape: &[usize], tau_abs: f64) -> Self {
        Self {
            codec_id: CODEC_BUILTIN_PQ,
            predictor: Predictor::LorenzoNd,
            dims: shape.to_vec(),
            tau_abs,
            backend_id: BACKEND_ZERO_RLE,
        }
    }

    pub fn with_codec(mut self, codec_id: u8) -> Self {
        self.codec_id = codec_id;
        self
    }

    pub fn with_backend(mut self, backend_id: u8) -> Self {
        self.backend_id = backend_id;
        self
    }

    pub fn element_count(&self) -> Option<usize> {
        self.dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tau_abs.is_finite() && self.tau_abs >= 0.0) {
            return Err(Error::InvalidConfig(format!("tau_abs must be finite and >= 0, got {}", self.tau_abs)));
        }
        if self.dims.is_empty() || self.dims.len() > MAX_DIMS {
            return Err(Error::InvalidConfig(format!("{} dims; expected 1..={MAX_DIMS}", self.dims.len())));
        }
        match self.element_count() {
            Some(count) if count == n => Ok(()),
            Some(count) => Err(Error::LengthMismatch { expected: count, actual: n }),
            None => Err(Error::InvalidConfig("dims product overflows".into())),
        }
    }
}

/// One compressed array: header plus backend stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedComponent {
    pub spec: CodecSpec,
    pub n_elements: u64,
    /// Full self-describing payload, header included.
    pub payload: Vec<u8>,
    pub original_bytes: u64,
}

struct Header {
    spec: CodecSpec,
    n: usize,
    escapes: u64,
}

fn write_header(spec: &CodecSpec, n: usize, escapes: u64, backend_id: u8, out: &mut Vec<u8>) {
    put_u8(out, spec.codec_id);
    put_u8(out, spec.predictor.id());
    put_u8(out, backend_id);
    put_u8(out, 0);
    put_f64(out, spec.tau_abs);
    put_u64(out, n as u64);
    put_u8(out, spec.dims.len() as u8);
    for &d in &spec.dims {
        put_u64(out, d as u64);
    }
    put_u64(out, escapes);
}

fn read_header<'a>(r: &mut Reader<'a>) -> Result<Header> {
    let codec_id = r.u8()?;
    let predictor = Predictor::from_id(r.u8()?)?;
    let backend_id = r.u8()?;
    let _reserved = r.u8()?;
    let tau_abs = r.f64()?;
    let n = usize::try_from(r.u64()?).map_err(|_| r.fail("element count exceeds address space"))?;
    let ndims = usize::from(r.u8()?);
    let dims = (0..ndims)
        .map(|_| r.u64().and_then(|d| usize::try_from(d).map_err(|_| r.fail("dimension too large"))))
        .collect::<Result<Vec<_>>>()?;
    let escapes = r.u64()?;
    let spec = CodecSpec { codec_id, predictor, dims, tau_abs, backend_id };
    spec.validate(n).map_err(|e| Error::CorruptPayload(e.to_string()))?;
    if escapes > n as u64 {
        return Err(r.fail(format!("{escapes} escapes for {n} elements")));
    }
    Ok(Header { spec, n, escapes })
}

impl EncodedComponent {
    /// Parses a payload produced by [`EncodedComponent::payload`].
    pub fn from_payload(payload: Vec<u8>) -> Result<Self> {
        let mut r = Reader::for_payload(&payload);
        let h = read_header(&mut r)?;
        Ok(Self {
            spec: h.spec,
            n_elements: h.n as u64,
            original_bytes: 8 * h.n as u64,
            payload,
        })
    }

    pub fn compressed_bytes(&self) -> u64 {
        self.payload.len() as u64
    }
}

/// Runs each section through the backend separately. Every section is
/// written as LEB128 plain length, LEB128 packed length, packed bytes.
fn pack_sections(backend: &dyn LosslessBackend, sections: &[&[u8]], out: &mut Vec<u8>) {
    for section in sections {
        let packed = backend.compress(section);
        backend::write_varint(out, section.len() as u64);
        backend::write_varint(out, packed.len() as u64);
        out.extend(packed);
    }
}

/// Inverse of [`pack_sections`]; `limits` caps each plain length.
fn unpack_sections(backend: &dyn LosslessBackend, stream: &[u8], limits: &[usize]) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(limits.len());
    let mut pos = 0;
    for &limit in limits {
        let plain_len = backend::read_varint(stream, &mut pos)?;
        let plain_len = usize::try_from(plain_len)
            .ok()
            .filter(|&l| l <= limit)
            .ok_or_else(|| Error::CorruptPayload(format!("section of {plain_len} bytes exceeds {limit}")))?;
        let packed = backend::read_varint(stream, &mut pos)?;
        let end = usize::try_from(packed)
            .ok()
            .and_then(|p| pos.checked_add(p))
            .filter(|&e| e <= stream.len())
            .ok_or_else(|| Error::CorruptPayload("section overruns payload".into()))?;
        out.push(backend.decompress(&stream[pos..end], plain_len)?);
        pos = end;
    }
    if pos != stream.len() {
        return Err(Error::CorruptPayload(format!("{} trailing bytes", stream.len() - pos)));
    }
    Ok(out)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteValue { index }),
        None => Ok(()),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Built-in codecs, lossless backends and any registered external codecs.
#[derive(Clone)]
pub struct CodecRegistry {
    backends: BTreeMap<u8, Arc<dyn LosslessBackend>>,
    externals: BTreeMap<u8, Arc<ExternalCodec>>,
}

impl Default for CodecRegistry {
    fn default() -> Self {
        let mut backends: BTreeMap<u8, Arc<dyn LosslessBackend>> = BTreeMap::new();
        backends.insert(BACKEND_ZERO_RLE, Arc::new(ZeroRle));
        backends.insert(BACKEND_RAW, Arc::new(Raw));
        Self { backends, externals: BTreeMap::new() }
    }
}

impl std::fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CodecRegistry")
            .field("backends", &self.backends.keys().collect::<Vec<_>>())
            .field("externals", &self.externals)
            .finish()
    }
}

impl CodecRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a general-purpose lossless stage under its own id.
    pub fn register_backend(&mut self, backend: Arc<dyn LosslessBackend>) -> Result<()> {
        let id = backend.id();
        if id == BACKEND_OPAQUE || self.backends.contains_key(&id) {
            return Err(Error::InvalidConfig(format!("backend id {id} is reserved or taken")));
        }
        self.backends.insert(id, backend);
        Ok(())
    }

    pub fn register_external_codec(&mut self, id: u8, codec: ExternalCodec) -> Result<()> {
        if id < CODEC_EXTERNAL_MIN || self.externals.contains_key(&id) {
            return Err(Error::CodecIdUnavailable(id));
        }
        self.externals.insert(id, Arc::new(codec));
        Ok(())
    }

    pub fn has_codec(&self, id: u8) -> bool {
        id == CODEC_BUILTIN_PQ || id == CODEC_VERBATIM || self.externals.contains_key(&id)
    }

    fn backend(&self, id: u8) -> Result<&Arc<dyn LosslessBackend>> {
        self.backends.get(&id).ok_or(Error::UnknownBackend(id))
    }

    pub fn encode(&self, values: &[f64], spec: &CodecSpec) -> Result<EncodedComponent> {
        self.encode_with_reconstruction(values, spec).map(|(c, _)| c)
    }

    /// Encodes and also returns exactly what [`CodecRegistry::decode`]
    /// will produce for the result.
    pub fn encode_with_reconstruction(&self, values: &[f64], spec: &CodecSpec) -> Result<(EncodedComponent, Vec<f64>)> {
        check_finite(values)?;
        spec.validate(values.len())?;
        let n = values.len();
        let mut payload = Vec::new();
        let (spec, recon) = match spec.codec_id {
            CODEC_BUILTIN_PQ => {
                let backend = self.backend(spec.backend_id)?;
                let q = quantize::encode(values, &spec.dims, spec.predictor, spec.tau_abs)?;
                write_header(spec, n, q.escapes, spec.backend_id, &mut payload);
                pack_sections(backend.as_ref(), &[&q.codes, &q.escape_records], &mut payload);
                (spec.clone(), q.recon)
            }
            CODEC_VERBATIM => {
                let backend = self.backend(spec.backend_id)?;
                let spec = CodecSpec { predictor: Predictor::None, ..spec.clone() };
                let mut plain = Vec::with_capacity(8 * n);
                for &v in values {
                    put_f64(&mut plain, v);
                }
                write_header(&spec, n, 0, spec.backend_id, &mut payload);
                pack_sections(backend.as_ref(), &[&plain], &mut payload);
                (spec, values.to_vec())
            }
            id => {
                let codec = self.externals.get(&id).ok_or(Error::UnknownCodec(id))?;
                let spec = CodecSpec { predictor: Predictor::None, backend_id: BACKEND_OPAQUE, ..spec.clone() };
                let stream = codec.compress(values, spec.tau_abs)?;
                let recon = codec.decompress(&stream, n)?;
                check_finite(&recon).map_err(|e| Error::SubprocessFailure(format!("decoder output: {e}")))?;
                let max_error = max_abs_diff(values, &recon);
                if max_error > spec.tau_abs {
                    return Err(Error::ExternalCodecViolation { id, max_error, tau_abs: spec.tau_abs });
                }
                write_header(&spec, n, 0, BACKEND_OPAQUE, &mut payload);
                payload.extend(stream);
                (spec, recon)
            }
        };
        let comp = EncodedComponent { spec, n_elements: n as u64, payload, original_bytes: 8 * n as u64 };
        Ok((comp, recon))
    }

    pub fn decode(&self, comp: &EncodedComponent) -> Result<Vec<f64>> {
        self.decode_payload(&comp.payload)
    }

    pub fn decode_payload(&self, payload: &[u8]) -> Result<Vec<f64>> {
        let mut r = Reader::for_payload(payload);
        let h = read_header(&mut r)?;
        let stream = r.rest();
        let spec = &h.spec;
        match spec.codec_id {
            CODEC_BUILTIN_PQ => {
                let overflow = || Error::CorruptPayload("stream length overflows".into());
                let codes_limit = quantize::max_packed_len(h.n, spec.tau_abs).ok_or_else(overflow)?;
                let records_limit = usize::try_from(h.escapes)
                    .ok()
                    .and_then(|e| e.checked_mul(quantize::ESCAPE_RECORD))
                    .ok_or_else(overflow)?;
                let sections = unpack_sections(self.backend(spec.backend_id)?.as_ref(), stream, &[codes_limit, records_limit])?;
                quantize::decode(&sections[0], &sections[1], h.n, &spec.dims, spec.predictor, spec.tau_abs, h.escapes)
            }
            CODEC_VERBATIM => {
                let expect = h
                    .n
                    .checked_mul(8)
                    .ok_or_else(|| Error::CorruptPayload("stream length overflows".into()))?;
                let plain = unpack_sections(self.backend(spec.backend_id)?.as_ref(), stream, &[expect])?.remove(0);
                if plain.len() != expect {
                    return Err(Error::CorruptPayload(format!("{} value bytes, expected {expect}", plain.len())));
                }
                Ok(plain.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            }
            id => {
                let codec = self.externals.get(&id).ok_or(Error::UnknownCodec(id))?;
                codec.decompress(stream, h.n)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn smooth(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.01).sin() + 0.3 * (i as f64 * 0.037).cos()).collect()
    }

    fn lcg_values(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    fn cat_registry() -> CodecRegistry {
        let mut reg = CodecRegistry::default();
        reg.register_external_codec(200, ExternalCodec::new("sh", vec!["-c".into(), "cat".into()]))
            .unwrap();
        reg
    }

    #[test]
    fn header_round_trips_spec() {
        let reg = CodecRegistry::default();
        let values = smooth(60);
        let spec = CodecSpec::grid(&[6, 10], 1e-3);
        let comp = reg.encode(&values, &spec).unwrap();
        let parsed = EncodedComponent::from_payload(comp.payload.clone()).unwrap();
        assert_eq!(parsed, comp);
        assert_eq!(comp.original_bytes, 480);
        // fixed header: 4 + 8 + 8 + 1 + 2 * 8 + 8
        assert!(comp.payload.len() >= 45);
        assert_eq!(comp.payload[0], CODEC_BUILTIN_PQ);
        assert_eq!(comp.payload[1], 2);
    }

    #[test]
    fn all_zero_array_is_under_one_percent() {
        let reg = CodecRegistry::default();
        for tau in [0.0, 1e-6, 0.5] {
            let comp = reg.encode(&vec![0.0; 10_000], &CodecSpec::sequence(10_000, tau)).unwrap();
            assert!(comp.payload.len() * 100 < 80_000, "tau {tau}: {} bytes", comp.payload.len());
            assert_eq!(reg.decode(&comp).unwrap(), vec![0.0; 10_000]);
        }
    }

    #[test]
    fn million_random_values_stay_in_bound() {
        let reg = CodecRegistry::default();
        let values = lcg_values(1_000_000, 42);
        let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        let tau = 1e-3 * (hi - lo);
        let comp = reg.encode(&values, &CodecSpec::sequence(values.len(), tau)).unwrap();
        let back = reg.decode(&comp).unwrap();
        assert_eq!(back.len(), values.len());
        assert!(max_abs_diff(&values, &back) <= tau);
        assert_eq!(reg.decode(&comp).unwrap(), back);
    }

    #[test]
    fn no_drift_with_length() {
        let reg = CodecRegistry::default();
        let tau = 1e-4;
        // slow random walk: predictions would drift if made from originals
        let steps = lcg_values(10_000_000, 9);
        let mut acc = 0.0;
        let long: Vec<f64> = steps.iter().map(|s| {
            acc += 1e-4 * s;
            acc
        }).collect();
        let short = &long[..100];
        for values in [short, &long[..]] {
            let back = reg.decode(&reg.encode(values, &CodecSpec::sequence(values.len(), tau)).unwrap()).unwrap();
            assert!(max_abs_diff(values, &back) <= tau, "length {}", values.len());
        }
    }

    #[test]
    fn payload_shrinks_as_tau_grows() {
        let reg = CodecRegistry::default();
        let values = smooth(20_000);
        let sizes: Vec<usize> = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&tau| reg.encode(&values, &CodecSpec::sequence(values.len(), tau)).unwrap().payload.len())
            .collect();
        for w in sizes.windows(2) {
            assert!(w[1] <= w[0], "{sizes:?}");
        }
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let reg = CodecRegistry::default();
        let values = lcg_values(500, 3);
        for spec in [CodecSpec::sequence(500, 1e-2), CodecSpec::sequence(500, 0.0), CodecSpec::sequence(500, 1e-2).with_codec(CODEC_VERBATIM)] {
            let comp = reg.encode(&values, &spec).unwrap();
            for cut in [0, 3, 20, comp.payload.len() / 2, comp.payload.len() - 1] {
                let err = reg.decode_payload(&comp.payload[..cut]).unwrap_err();
                assert!(matches!(err, Error::CorruptPayload(_)), "cut {cut}: {err}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let reg = CodecRegistry::default();
        assert!(matches!(
            reg.encode(&[1.0, f64::NAN], &CodecSpec::sequence(2, 0.1)),
            Err(Error::NonFiniteValue { index: 1 })
        ));
        assert!(matches!(
            reg.encode(&[1.0, 2.0], &CodecSpec::grid(&[3], 0.1)),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(reg.encode(&[1.0], &CodecSpec::sequence(1, -1.0)).is_err());
        assert!(matches!(
            reg.encode(&[1.0], &CodecSpec::sequence(1, 0.1).with_codec(7)),
            Err(Error::UnknownCodec(7))
        ));
        assert!(matches!(
            reg.encode(&[1.0], &CodecSpec::sequence(1, 0.1).with_backend(9)),
            Err(Error::UnknownBackend(9))
        ));
    }

    #[test]
    fn verbatim_and_raw_backend_are_exact() {
        let reg = CodecRegistry::default();
        let values = lcg_values(300, 5);
        for spec in [
            CodecSpec::sequence(300, 0.1).with_codec(CODEC_VERBATIM),
            CodecSpec::sequence(300, 0.0).with_backend(BACKEND_RAW),
        ] {
            let back = reg.decode(&reg.encode(&values, &spec).unwrap()).unwrap();
            assert_eq!(back, values);
        }
    }

    #[test]
    fn external_identity_codec_is_accepted() {
        let reg = cat_registry();
        let values = lcg_values(100, 8);
        let spec = CodecSpec::sequence(100, 0.0).with_codec(200);
        let (comp, recon) = reg.encode_with_reconstruction(&values, &spec).unwrap();
        assert_eq!(recon, values);
        assert_eq!(comp.payload[2], BACKEND_OPAQUE);
        assert_eq!(reg.decode(&comp).unwrap(), values);
    }

    #[test]
    fn external_codec_off_by_two_tau_is_rejected() {
        let script = r#"
import struct, sys
data = sys.stdin.buffer.read()
if sys.argv[-1] == "-d":
    n, tau = struct.unpack_from("<Qd", data)
    vals = struct.unpack_from("<%dd" % n, data, 16)
    data = struct.pack("<Qd", n, tau) + struct.pack("<%dd" % n, *[v + 2 * tau for v in vals])
sys.stdout.buffer.write(data)
"#;
        let mut reg = CodecRegistry::default();
        reg.register_external_codec(130, ExternalCodec::new("python3", vec!["-c".into(), script.into()]))
            .unwrap();
        let values = lcg_values(50, 1);
        let err = reg.encode(&values, &CodecSpec::sequence(50, 0.01).with_codec(130)).unwrap_err();
        match err {
            Error::ExternalCodecViolation { id, max_error, tau_abs } => {
                assert_eq!(id, 130);
                assert!((max_error - 0.02).abs() < 1e-12);
                assert_eq!(tau_abs, 0.01);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn failing_external_program_is_reported() {
        let mut reg = CodecRegistry::default();
        reg.register_external_codec(150, ExternalCodec::new("sh", vec!["-c".into(), "exit 3".into()]))
            .unwrap();
        let err = reg.encode(&[1.0], &CodecSpec::sequence(1, 0.1).with_codec(150)).unwrap_err();
        assert!(matches!(err, Error::SubprocessFailure(_)), "{err}");
    }

    #[test]
    fn reserved_and_duplicate_ids_are_refused() {
        let mut reg = cat_registry();
        let cat = || ExternalCodec::new("cat", vec![]);
        assert!(matches!(reg.register_external_codec(0, cat()), Err(Error::CodecIdUnavailable(0))));
        assert!(matches!(reg.register_external_codec(127, cat()), Err(Error::CodecIdUnavailable(127))));
        assert!(matches!(reg.register_external_codec(200, cat()), Err(Error::CodecIdUnavailable(200))));
        assert!(reg.register_backend(Arc::new(Raw)).is_err());
    }

    fn shape_and_values() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
        proptest::collection::vec(1usize..7, 1..4).prop_flat_map(|shape| {
            let n: usize = shape.iter().product();
            let values = prop_oneof![
                proptest::collection::vec(-1e3f64..1e3, n),
                proptest::collection::vec(prop_oneof![Just(0.0), -1e-3f64..1e-3, -1e300f64..1e300], n),
            ];
            (Just(shape), values)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn hard_bound_on_every_path(
            (shape, values) in shape_and_values(),
            exponent in -6.0f64..-1.0,
            nd in any::<bool>(),
            raw in any::<bool>(),
        ) {
            let reg = CodecRegistry::default();
            let (lo, hi) = values.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
            let range = if hi - lo > 0.0 && (hi - lo).is_finite() { hi - lo } else { 1.0 };
            let tau = 10f64.powf(exponent) * range;
            let mut spec = if nd { CodecSpec::grid(&shape, tau) } else { CodecSpec::sequence(values.len(), tau) };
            if raw {
                spec = spec.with_backend(BACKEND_RAW);
            }
            let (comp, recon) = reg.encode_with_reconstruction(&values, &spec).unwrap();
            let back = reg.decode(&comp).unwrap();
            prop_assert_eq!(&back, &recon);
            for (v, b) in values.iter().zip(&back) {
                prop_assert!((v - b).abs() <= tau, "{} vs {} at tau {}", v, b, tau);
            }
        }

        #[test]
        fn lossless_is_bitwise((shape, values) in shape_and_values()) {
            let reg = CodecRegistry::default();
            let comp = reg.encode(&values, &CodecSpec::grid(&shape, 0.0)).unwrap();
            let back = reg.decode(&comp).unwrap();
            for (v, b) in values.iter().zip(&back) {
                prop_assert_eq!(v.to_bits(), b.to_bits());
            }
        }
    }
}
