//! Multi-component compression: grid approximation plus residuals, each
//! encoded under its share of the error budget, and the archive container.
//!
//! With `x1` the cluster-mean grid field, `x2 = x - g(x1)` and codec
//! bounds `τ1`, `τ2`, the reconstruction `g(x1') + x2'` is within
//! `Σ|a_j|·τ1 + τ2 ≤ τ` of `x` in exact arithmetic. Floating-point
//! rounding in the recombination can still exceed the bound by an ulp (or
//! break bitwise identity when `τ = 0`), so the compressor replays the
//! decoder and stores the few offending vertices verbatim.

use std::fs;
use std::path::Path;

use crate::binio::{fnv1a64, put_f64, put_u16, put_u64, Reader};
use crate::codec::{CodecRegistry, CodecSpec, EncodedComponent, BACKEND_ZERO_RLE, CODEC_BUILTIN_PQ};
use crate::error::{Error, Result};
use crate::interp::{interpolate_to_grid, BackInterpKind, BackInterpolator, FillPolicy};
use crate::mesh_core::io::mapping_to_bytes;
use crate::mesh_core::{Field, MappingMode, MappingTable, Mesh, RectGrid};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"UMCZ";
pub const ARCHIVE_VERSION: u16 = 1;

const FLAG_SEED: u16 = 1 << 0;
const FLAG_MULTILINEAR: u16 = 1 << 1;
const FLAG_RELATIVE: u16 = 1 << 2;
const FLAG_BASELINE: u16 = 1 << 3;
const FLAG_OVERRIDES: u16 = 1 << 4;
const KNOWN_FLAGS: u16 = FLAG_SEED | FLAG_MULTILINEAR | FLAG_RELATIVE | FLAG_BASELINE | FLAG_OVERRIDES;

pub const DEFAULT_RHO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundKind {
    Absolute,
    /// Fraction of the field's value range.
    #[default]
    Relative,
}

/// Requested bound and how it is split between the two components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub tau: f64,
    pub rho: f64,
    pub kind: BoundKind,
}

impl ErrorBudget {
    pub fn new(tau: f64, rho: f64, kind: BoundKind) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::BudgetInadmissible(format!("tau must be finite and >= 0, got {tau}")));
        }
        check_rho(rho)?;
        Ok(Self { tau, rho, kind })
    }

    pub fn absolute(tau: f64, rho: f64) -> Result<Self> {
        Self::new(tau, rho, BoundKind::Absolute)
    }

    pub fn relative(tau: f64, rho: f64) -> Result<Self> {
        Self::new(tau, rho, BoundKind::Relative)
    }

    /// Absolute pointwise bound for `values`.
    pub fn tau_abs(&self, values: &[f64]) -> f64 {
        match self.kind {
            BoundKind::Absolute => self.tau,
            BoundKind::Relative => self.tau * value_range(values),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::BudgetInadmissible(format!("rho must lie in (0, 1), got {rho}")))
    }
}

fn value_range(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo
}

/// Splits `tau` into `(τ1, τ2) = (ρτ/s, (1-ρ)τ)` for a back-interpolation
/// with absolute coefficient sum `s`.
pub fn split_budget(tau: f64, rho: f64, kind: BackInterpKind) -> Result<(f64, f64)> {
    split_budget_with_sum(tau, rho, kind.coeff_abs_sum())
}

pub fn split_budget_with_sum(tau: f64, rho: f64, coeff_abs_sum: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::BudgetInadmissible(format!("tau must be finite and >= 0, got {tau}")));
    }
    if !(coeff_abs_sum.is_finite() && coeff_abs_sum > 0.0) {
        return Err(Error::BudgetInadmissible(format!("coefficient sum must be positive, got {coeff_abs_sum}")));
    }
    let tau1 = rho * tau / coeff_abs_sum;
    let mut tau2 = (1.0 - rho) * tau;
    // Rounding in the products can push the sum an ulp over tau.
    while coeff_abs_sum * tau1 + tau2 > tau && tau2 > 0.0 {
        tau2 = tau2.next_down();
    }
    if coeff_abs_sum * tau1 + tau2 > tau {
        return Err(Error::BudgetInadmissible(format!(
            "{coeff_abs_sum}·{tau1} + {tau2} exceeds {tau}"
        )));
    }
    Ok((tau1, tau2))
}

/// Everything about the mesh-to-grid relationship that is independent of
/// field values. Build once, reuse for every field on the mesh.
#[derive(Debug, Clone)]
pub struct Layout {
    grid: RectGrid,
    mapping: MappingTable,
    back: BackInterpolator,
    digest: u64,
}

impl Layout {
    pub fn new(grid: RectGrid, mapping: MappingTable, kind: BackInterpKind, mesh: Option<&Mesh>) -> Result<Self> {
        mapping.validate(&grid)?;
        let back = BackInterpolator::build(kind, mesh, &grid, &mapping)?;
        let digest = mapping_digest(&mapping);
        Ok(Self { grid, mapping, back, digest })
    }

    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }

    pub fn mapping(&self) -> &MappingTable {
        &self.mapping
    }

    pub fn back_interpolator(&self) -> &BackInterpolator {
        &self.back
    }

    pub fn back_kind(&self) -> BackInterpKind {
        self.back.kind()
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }
}

/// FNV-1a 64 over the serialized mapping table.
pub fn mapping_digest(map: &MappingTable) -> u64 {
    fnv1a64(&mapping_to_bytes(map))
}

/// Codec choices for one compression run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressOptions {
    pub fill: FillPolicy,
    pub grid_codec: u8,
    pub residual_codec: u8,
    pub backend: u8,
}

impl Default for CompressOptions {
    fn default() -> Self {
        Self {
            fill: FillPolicy::default(),
            grid_codec: CODEC_BUILTIN_PQ,
            residual_codec: CODEC_BUILTIN_PQ,
            backend: BACKEND_ZERO_RLE,
        }
    }
}

impl CompressOptions {
    /// Same codec for both components.
    pub fn with_codec(codec: u8) -> Self {
        Self { grid_codec: codec, residual_codec: codec, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    MultiComponent { grid: EncodedComponent, residual: EncodedComponent },
    Baseline(EncodedComponent),
}

/// A compressed field.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub field_name: String,
    pub mapping_digest: u64,
    pub seed_mode: bool,
    pub back_kind: BackInterpKind,
    pub budget: ErrorBudget,
    pub tau_abs: f64,
    pub payload: Payload,
    /// Vertices stored verbatim because recombination missed the bound.
    pub overrides: Vec<(u64, f64)>,
}

impl Archive {
    pub fn is_baseline(&self) -> bool {
        matches!(self.payload, Payload::Baseline(_))
    }

    /// Bytes of the uncompressed field, 8 per vertex.
    pub fn original_bytes(&self) -> u64 {
        match &self.payload {
            Payload::MultiComponent { residual, .. } => residual.original_bytes,
            Payload::Baseline(c) => c.original_bytes,
        }
    }

    /// Component payloads plus any overrides; grid and mapping are not
    /// counted.
    pub fn compressed_bytes(&self) -> u64 {
        let components = match &self.payload {
            Payload::MultiComponent { grid, residual } => grid.compressed_bytes() + residual.compressed_bytes(),
            Payload::Baseline(c) => c.compressed_bytes(),
        };
        let overrides = if self.overrides.is_empty() { 0 } else { 8 + 16 * self.overrides.len() as u64 };
        components + overrides
    }

    pub fn compression_ratio(&self) -> f64 {
        self.original_bytes() as f64 / self.compressed_bytes() as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut flags = 0u16;
        if self.seed_mode {
            flags |= FLAG_SEED;
        }
        if self.back_kind == BackInterpKind::Multilinear {
            flags |= FLAG_MULTILINEAR;
        }
        if self.budget.kind == BoundKind::Relative {
            flags |= FLAG_RELATIVE;
        }
        if self.is_baseline() {
            flags |= FLAG_BASELINE;
        }
        if !self.overrides.is_empty() {
            flags |= FLAG_OVERRIDES;
        }
        let name = truncate_name(&self.field_name);
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        put_u16(&mut out, ARCHIVE_VERSION);
        put_u16(&mut out, flags);
        put_u16(&mut out, name.len() as u16);
        out.extend_from_slice(name.as_bytes());
        put_u64(&mut out, self.mapping_digest);
        put_f64(&mut out, self.budget.tau);
        put_f64(&mut out, self.budget.rho);
        put_f64(&mut out, self.tau_abs);
        let (first, second) = match &self.payload {
            Payload::MultiComponent { grid, residual } => (grid, Some(residual)),
            Payload::Baseline(c) => (c, None),
        };
        for comp in [Some(first), second] {
            let bytes = comp.map_or(&[][..], |c| &c.payload[..]);
            put_u64(&mut out, bytes.len() as u64);
            out.extend_from_slice(bytes);
        }
        if !self.overrides.is_empty() {
            put_u64(&mut out, self.overrides.len() as u64);
            for &(i, v) in &self.overrides {
                put_u64(&mut out, i);
                put_f64(&mut out, v);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::for_file(bytes);
        r.magic(ARCHIVE_MAGIC)?;
        let version = r.u16()?;
        if version != ARCHIVE_VERSION {
            return Err(r.fail(format!("unsupported archive version {version}")));
        }
        let flags = r.u16()?;
        if flags & !KNOWN_FLAGS != 0 {
            return Err(r.fail(format!("unknown archive flags {flags:#06x}")));
        }
        let name_len = usize::from(r.u16()?);
        let field_name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| r.fail("field name is not UTF-8"))?;
        let mapping_digest = r.u64()?;
        let tau = r.f64()?;
        let rho = r.f64()?;
        let tau_abs = r.f64()?;
        let kind = if flags & FLAG_RELATIVE != 0 { BoundKind::Relative } else { BoundKind::Absolute };
        let budget = ErrorBudget::new(tau, rho, kind).map_err(|e| r.fail(e.to_string()))?;
        if !(tau_abs.is_finite() && tau_abs >= 0.0) {
            return Err(r.fail(format!("bad absolute bound {tau_abs}")));
        }
        let blob = |r: &mut Reader<'_>| -> Result<Vec<u8>> {
            let len = r.count(1)?;
            Ok(r.take(len)?.to_vec())
        };
        let first = blob(&mut r)?;
        let second = blob(&mut r)?;
        let component = |b: Vec<u8>| EncodedComponent::from_payload(b).map_err(|e| Error::MalformedFile(e.to_string()));
        let payload = if flags & FLAG_BASELINE != 0 {
            if !second.is_empty() {
                return Err(r.fail("baseline archive carries a second component"));
            }
            Payload::Baseline(component(first)?)
        } else {
            let grid = component(first)?;
            let residual = component(second)?;
            Payload::MultiComponent { grid, residual }
        };
        let mut overrides = Vec::new();
        if flags & FLAG_OVERRIDES != 0 {
            let n = r.count(16)?;
            overrides.reserve(n);
            for _ in 0..n {
                overrides.push((r.u64()?, r.f64()?));
            }
        }
        r.finish()?;
        let archive = Self {
            field_name,
            mapping_digest,
            seed_mode: flags & FLAG_SEED != 0,
            back_kind: if flags & FLAG_MULTILINEAR != 0 { BackInterpKind::Multilinear } else { BackInterpKind::Nearest },
            budget,
            tau_abs,
            payload,
            overrides,
        };
        let n = archive.original_bytes() / 8;
        if archive.overrides.iter().any(|&(i, _)| i >= n) {
            return Err(Error::MalformedFile("override index out of range".into()));
        }
        Ok(archive)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn truncate_name(name: &str) -> &str {
    let mut end = name.len().min(u16::MAX as usize);
    while !name.is_char_boundary(end) {
        end -= 1;
    }
    &name[..end]
}

fn within_bound(x: f64, y: f64, tau_abs: f64) -> bool {
    if tau_abs == 0.0 {
        x.to_bits() == y.to_bits()
    } else {
        (x - y).abs() <= tau_abs
    }
}

fn recombine(back: &BackInterpolator, grid_values: &[f64], residuals: &[f64]) -> Vec<f64> {
    back.apply(grid_values).iter().zip(residuals).map(|(g, r)| g + r).collect()
}

/// Multi-component compression of `field` under `budget`.
pub fn compress(
    field: &Field,
    layout: &Layout,
    budget: &ErrorBudget,
    opts: &CompressOptions,
    registry: &CodecRegistry,
) -> Result<Archive> {
    let x = field.values();
    let tau_abs = budget.tau_abs(x);
    let (tau1, tau2) = split_budget(tau_abs, budget.rho, layout.back_kind())?;

    let gridfield = interpolate_to_grid(field, &layout.mapping, &layout.grid, opts.fill)?;
    let approx = layout.back.apply(&gridfield.values);
    let residuals: Vec<f64> = x.iter().zip(&approx).map(|(x, g)| x - g).collect();

    let grid_spec = match gridfield.mode {
        MappingMode::Dense => CodecSpec::grid(&gridfield.shape, tau1),
        MappingMode::Seed => CodecSpec::sequence(gridfield.values.len(), tau1),
    }
    .with_codec(opts.grid_codec)
    .with_backend(opts.backend);
    let residual_spec = CodecSpec::sequence(residuals.len(), tau2)
        .with_codec(opts.residual_codec)
        .with_backend(opts.backend);

    let (grid_result, residual_result) = std::thread::scope(|s| {
        let h = s.spawn(|| registry.encode_with_reconstruction(&gridfield.values, &grid_spec));
        let r = registry.encode_with_reconstruction(&residuals, &residual_spec);
        (h.join().expect("grid encoder panicked"), r)
    });
    let (grid_comp, grid_recon) = grid_result?;
    let (residual_comp, residual_recon) = residual_result?;

    let recon = recombine(&layout.back, &grid_recon, &residual_recon);
    let overrides = x
        .iter()
        .zip(&recon)
        .enumerate()
        .filter(|(_, (&x, &y))| !within_bound(x, y, tau_abs))
        .map(|(i, (&x, _))| (i as u64, x))
        .collect();

    Ok(Archive {
        field_name: field.name().to_owned(),
        mapping_digest: layout.digest,
        seed_mode: gridfield.mode == MappingMode::Seed,
        back_kind: layout.back_kind(),
        budget: *budget,
        tau_abs,
        payload: Payload::MultiComponent { grid: grid_comp, residual: residual_comp },
        overrides,
    })
}

/// Single-component encoding of the field in file order at the full bound.
pub fn compress_baseline(
    field: &Field,
    tau_abs: f64,
    codec: u8,
    backend: u8,
    registry: &CodecRegistry,
) -> Result<EncodedComponent> {
    let spec = CodecSpec::sequence(field.len(), tau_abs).with_codec(codec).with_backend(backend);
    registry.encode(field.values(), &spec)
}

/// [`compress_baseline`] wrapped in an archive so it can be stored and
/// decompressed like any other.
pub fn compress_baseline_archive(
    field: &Field,
    budget: &ErrorBudget,
    opts: &CompressOptions,
    registry: &CodecRegistry,
) -> Result<Archive> {
    let tau_abs = budget.tau_abs(field.values());
    let comp = compress_baseline(field, tau_abs, opts.residual_codec, opts.backend, registry)?;
    Ok(Archive {
        field_name: field.name().to_owned(),
        mapping_digest: 0,
        seed_mode: false,
        back_kind: BackInterpKind::Nearest,
        budget: *budget,
        tau_abs,
        payload: Payload::Baseline(comp),
        overrides: Vec::new(),
    })
}

/// Reconstructs the field. `layout` is required for multi-component
/// archives and ignored for baseline ones.
pub fn decompress(archive: &Archive, layout: Option<&Layout>, registry: &CodecRegistry) -> Result<Field> {
    let mut values = match &archive.payload {
        Payload::Baseline(comp) => registry.decode(comp)?,
        Payload::MultiComponent { grid, residual } => {
            let layout = layout.ok_or_else(|| Error::InvalidConfig("multi-component archive needs grid and mapping".into()))?;
            if layout.digest != archive.mapping_digest {
                return Err(Error::MappingMismatch { expected: archive.mapping_digest, actual: layout.digest });
            }
            if layout.back_kind() != archive.back_kind {
                return Err(Error::InvalidConfig(format!(
                    "archive uses {:?} back-interpolation, layout provides {:?}",
                    archive.back_kind,
                    layout.back_kind()
                )));
            }
            let expected_grid = layout.mapping.component_len(&layout.grid);
            if grid.n_elements != expected_grid as u64 || residual.n_elements != layout.mapping.num_vertices() as u64 {
                return Err(Error::CorruptPayload("component sizes disagree with the layout".into()));
            }
            let grid_values = registry.decode(grid)?;
            let residuals = registry.decode(residual)?;
            recombine(&layout.back, &grid_values, &residuals)
        }
    };
    for &(i, v) in &archive.overrides {
        let slot = values
            .get_mut(i as usize)
            .ok_or(Error::IndexOutOfRange { index: i, limit: archive.original_bytes() / 8 })?;
        *slot = v;
    }
    Field::new(archive.field_name.clone(), values)
}
