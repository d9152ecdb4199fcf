//! Synthetic meshes and analytic fields.
//!
//! Meshes are jittered structured point sets on the unit square or cube,
//! triangulated two triangles per quad (2-D) or five tetrahedra per cube
//! (3-D), with the vertex order shuffled. All randomness comes from a
//! splitmix64 stream, so output is a pure function of the [`SynthSpec`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh_core::{Field, Mesh};

/// The splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..n` (Lemire's multiply-shift, slightly biased for huge
    /// `n`, which is irrelevant here).
    pub fn below(&mut self, n: usize) -> usize {
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeshStyle {
    #[default]
    Jittered,
    /// Cells shrink 4x towards the boundary.
    Graded,
    /// An elliptical void in the middle of the domain.
    Holed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldKind {
    #[default]
    GaussianMixture,
    MultiSine,
    WhiteNoise,
    Constant,
}

macro_rules! named_enum {
    ($ty:ty, $($variant:ident => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        "unknown {} {other:?}; expected one of: {}",
                        stringify!($ty),
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(MeshStyle, Jittered => "jittered", Graded => "graded", Holed => "holed");
named_enum!(FieldKind, GaussianMixture => "gaussian-mixture", MultiSine => "multi-sine", WhiteNoise => "white-noise", Constant => "constant");

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub dim: usize,
    pub n_target: usize,
    pub style: MeshStyle,
    pub field: FieldKind,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { dim: 2, n_target: 50_000, style: MeshStyle::Holed, field: FieldKind::GaussianMixture, seed: 7 }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::InvalidConfig(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.n_target < 4 {
            return Err(Error::InvalidConfig(format!("n_target must be >= 4, got {}", self.n_target)));
        }
        Ok(())
    }
}

// independent streams for geometry and field parameters
const MESH_STREAM: u64 = 0x6d65_7368;
const FIELD_STREAM: u64 = 0x6669_656c;

/// Strength of the boundary grading map `u - A sin(2πu)/(2π)`; local
/// spacing is proportional to `1 - A cos(2πu)`, i.e. 4x finer at the edges.
const GRADING: f64 = 0.6;
/// Void: axis-aligned ellipse (ellipsoid in 3-D) centred in the domain.
pub const VOID_CENTER: f64 = 0.5;
pub const VOID_SEMI_AXES: [f64; 3] = [0.3, 0.12, 0.12];
const JITTER: f64 = 0.25;

fn grade(u: f64) -> f64 {
    u - GRADING * (2.0 * PI * u).sin() / (2.0 * PI)
}

fn grade_slope(u: f64) -> f64 {
    1.0 - GRADING * (2.0 * PI * u).cos()
}

/// True when `p` lies strictly inside the void.
pub fn in_void(p: &[f64]) -> bool {
    p.iter()
        .zip(VOID_SEMI_AXES)
        .map(|(&c, a)| ((c - VOID_CENTER) / a).powi(2))
        .sum::<f64>()
        < 1.0
}

fn void_volume_fraction(dim: usize) -> f64 {
    match dim {
        2 => PI * VOID_SEMI_AXES[0] * VOID_SEMI_AXES[1],
        _ => 4.0 / 3.0 * PI * VOID_SEMI_AXES.iter().product::<f64>(),
    }
}

pub fn gen_mesh(spec: &SynthSpec) -> Result<Mesh> {
    spec.validate()?;
    let dim = spec.dim;
    let mut rng = SplitMix64::new(spec.seed ^ MESH_STREAM);
    let keep = if spec.style == MeshStyle::Holed { 1.0 - void_volume_fraction(dim) } else { 1.0 };
    let per_axis = ((spec.n_target as f64 / keep).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let h = 1.0 / (per_axis - 1) as f64;

    // structured lattice, last axis fastest within each vertex tuple
    let total = per_axis.pow(dim as u32);
    let mut coords = Vec::with_capacity(total * dim);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        for &k in &idx {
            let u = k as f64 * h;
            let interior = k > 0 && k < per_axis - 1;
            let (pos, spacing) = match spec.style {
                MeshStyle::Graded => (grade(u), h * grade_slope(u)),
                _ => (u, h),
            };
            let jitter = if interior { JITTER * spacing * rng.uniform(-1.0, 1.0) } else { 0.0 };
            coords.push(pos + jitter);
        }
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
        }
    }

    let (arity, mut cells) = if dim == 2 { (3, triangulate(per_axis)) } else { (4, tetrahedralize(per_axis)) };

    if spec.style == MeshStyle::Holed {
        let (kept_coords, kept_cells) = carve_void(dim, &coords, arity, &cells);
        coords = kept_coords;
        cells = kept_cells;
    }

    let n = coords.len() / dim;
    // Fisher-Yates; new_of[old] gives the shuffled position
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let mut new_of = vec![0usize; n];
    let mut shuffled = vec![0.0; coords.len()];
    for (new, &old) in order.iter().enumerate() {
        new_of[old] = new;
        shuffled[new * dim..(new + 1) * dim].copy_from_slice(&coords[old * dim..(old + 1) * dim]);
    }
    for v in &mut cells {
        *v = new_of[*v];
    }
    Mesh::new(dim, shuffled, arity, cells)
}

fn triangulate(m: usize) -> Vec<usize> {
    let mut cells = Vec::with_capacity(6 * (m - 1) * (m - 1));
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            let a = i * m + j;
            let (b, c, d) = (a + 1, a + m, a + m + 1);
            cells.extend([a, b, d, a, d, c]);
        }
    }
    cells
}

fn tetrahedralize(m: usize) -> Vec<usize> {
    // cube corner `bits` = x | y << 1 | z << 2 in lattice offsets
    const EVEN: [[usize; 4]; 5] = [[0, 1, 2, 4], [3, 1, 2, 7], [5, 1, 4, 7], [6, 2, 4, 7], [1, 2, 4, 7]];
    const ODD: [[usize; 4]; 5] = [[1, 0, 3, 5], [2, 0, 3, 6], [4, 0, 5, 6], [7, 3, 5, 6], [0, 3, 5, 6]];
    let at = |x: usize, y: usize, z: usize| (x * m + y) * m + z;
    let mut cells = Vec::with_capacity(20 * (m - 1).pow(3));
    for x in 0..m - 1 {
        for y in 0..m - 1 {
            for z in 0..m - 1 {
                let corner = |bits: usize| at(x + (bits & 1), y + (bits >> 1 & 1), z + (bits >> 2 & 1));
                let pattern = if (x + y + z) % 2 == 0 { &EVEN } else { &ODD };
                for tet in pattern {
                    cells.extend(tet.iter().map(|&b| corner(b)));
                }
            }
        }
    }
    cells
}

/// Drops vertices inside the void and every cell touching one.
fn carve_void(dim: usize, coords: &[f64], arity: usize, cells: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n = coords.len() / dim;
    let mut new_index = vec![usize::MAX; n];
    let mut kept = Vec::with_capacity(coords.len());
    for (i, p) in coords.chunks_exact(dim).enumerate() {
        if !in_void(p) {
            new_index[i] = kept.len() / dim;
            kept.extend_from_slice(p);
        }
    }
    let kept_cells = cells
        .chunks_exact(arity)
        .filter(|c| c.iter().all(|&v| new_index[v] != usize::MAX))
        .flat_map(|c| c.iter().map(|&v| new_index[v]))
        .collect();
    (kept, kept_cells)
}

/// `Σ A_k exp(-‖p − μ_k‖² / σ_k²)` with five terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub amplitudes: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
}

impl GaussianMixture {
    pub const TERMS: usize = 5;

    pub fn from_seed(seed: u64, dim: usize) -> Self {
        let mut rng = SplitMix64::new(seed ^ FIELD_STREAM);
        let mut g = Self { amplitudes: Vec::new(), centers: Vec::new(), widths: Vec::new() };
        for _ in 0..Self::TERMS {
            g.amplitudes.push(rng.uniform(-1.0, 1.0) + if rng.next_f64() < 0.5 { -0.5 } else { 0.5 });
            g.centers.push((0..dim).map(|_| rng.uniform(0.1, 0.9)).collect());
            g.widths.push(rng.uniform(0.15, 0.4));
        }
        g
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.amplitudes.len() {
            let r2: f64 = p.iter().zip(&self.centers[k]).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += self.amplitudes[k] * (-r2 / (self.widths[k] * self.widths[k])).exp();
        }
        sum
    }
}

/// `Σ a_k sin(ω_k·p + φ_k)` with twenty terms and `|ω_k| ≤ 40π`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSine {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<Vec<f64>>,
    pub phases: Vec<f64>,
}

impl MultiSine {
    pub const TERMS: usize = 20;
    pub const MAX_FREQUENCY: f64 = 40.0 * PI;

    pub fn from_seed(seed: u64, dim: usize) -> Self {
        let mut rng = SplitMix64::new(seed ^ FIELD_STREAM);
        let mut s = Self { amplitudes: Vec::new(), frequencies: Vec::new(), phases: Vec::new() };
        for _ in 0..Self::TERMS {
            s.amplitudes.push(rng.uniform(0.1, 1.0));
            let dir: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
            let magnitude = rng.uniform(PI, Self::MAX_FREQUENCY);
            s.frequencies.push(dir.iter().map(|d| d / norm * magnitude).collect());
            s.phases.push(rng.uniform(0.0, 2.0 * PI));
        }
        s
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.amplitudes.len() {
            let arg: f64 = p.iter().zip(&self.frequencies[k]).map(|(a, w)| a * w).sum();
            sum += self.amplitudes[k] * (arg + self.phases[k]).sin();
        }
        sum
    }
}

/// Evaluates the field kind of `spec` at every vertex of `mesh`.
pub fn gen_field(mesh: &Mesh, spec: &SynthSpec) -> Result<Field> {
    let dim = mesh.dim();
    let values: Vec<f64> = match spec.field {
        FieldKind::GaussianMixture => {
            let g = GaussianMixture::from_seed(spec.seed, dim);
            mesh.vertices().map(|p| g.eval(p)).collect()
        }
        FieldKind::MultiSine => {
            let s = MultiSine::from_seed(spec.seed, dim);
            mesh.vertices().map(|p| s.eval(p)).collect()
        }
        FieldKind::WhiteNoise => {
            let mut rng = SplitMix64::new(spec.seed ^ FIELD_STREAM);
            (0..mesh.num_vertices()).map(|_| rng.uniform(-1.0, 1.0)).collect()
        }
        FieldKind::Constant => vec![0.0; mesh.num_vertices()],
    };
    Field::new(spec.field.name(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(style: MeshStyle, n: usize) -> SynthSpec {
        SynthSpec { dim: 2, n_target: n, style, field: FieldKind::GaussianMixture, seed: 7 }
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 of the reference implementation
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(r.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(r.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn meshes_are_deterministic() {
        for style in [MeshStyle::Jittered, MeshStyle::Graded, MeshStyle::Holed] {
            let a = gen_mesh(&spec(style, 500)).unwrap();
            let b = gen_mesh(&spec(style, 500)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, gen_mesh(&SynthSpec { seed: 8, ..spec(style, 500) }).unwrap());
        }
    }

    #[test]
    fn vertex_count_tracks_target() {
        for style in [MeshStyle::Jittered, MeshStyle::Graded, MeshStyle::Holed] {
            let n = gen_mesh(&spec(style, 10_000)).unwrap().num_vertices();
            assert!((9_000..12_000).contains(&n), "{style}: {n}");
        }
        let tet = gen_mesh(&SynthSpec { dim: 3, ..spec(MeshStyle::Jittered, 1000) }).unwrap();
        assert_eq!(tet.num_vertices(), 1000);
        assert_eq!(tet.num_cells(), 5 * 9 * 9 * 9);
    }

    #[test]
    fn holed_mesh_has_empty_void() {
        for dim in [2, 3] {
            let mesh = gen_mesh(&SynthSpec { dim, ..spec(MeshStyle::Holed, 4000) }).unwrap();
            assert_eq!(mesh.vertices().filter(|p| in_void(p)).count(), 0);
            // a full lattice would have put points there
            let full = gen_mesh(&SynthSpec { dim, ..spec(MeshStyle::Jittered, 4000) }).unwrap();
            assert!(full.vertices().filter(|p| in_void(p)).count() > 0);
        }
    }

    #[test]
    fn graded_mesh_is_finer_near_boundary() {
        let mesh = gen_mesh(&spec(MeshStyle::Graded, 10_000)).unwrap();
        let mut near = Vec::new();
        let mut inner = Vec::new();
        for cell in mesh.cells() {
            for k in 0..3 {
                let (a, b) = (mesh.vertex(cell[k]), mesh.vertex(cell[(k + 1) % 3]));
                let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let wall = mid.iter().map(|&c| c.min(1.0 - c)).fold(f64::MAX, f64::min);
                if wall < 0.05 {
                    near.push(len);
                } else if wall > 0.25 {
                    inner.push(len);
                }
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        assert!(median(&mut near) < 0.5 * median(&mut inner));
    }

    #[test]
    fn tets_have_positive_volume() {
        let mesh = gen_mesh(&SynthSpec { dim: 3, ..spec(MeshStyle::Jittered, 125) }).unwrap();
        let mut total = 0.0;
        for c in mesh.cells() {
            let p: Vec<&[f64]> = c.iter().map(|&v| mesh.vertex(v)).collect();
            let e = |k: usize| [p[k][0] - p[0][0], p[k][1] - p[0][1], p[k][2] - p[0][2]];
            let (a, b, d) = (e(1), e(2), e(3));
            let det = a[0] * (b[1] * d[2] - b[2] * d[1]) - a[1] * (b[0] * d[2] - b[2] * d[0]) + a[2] * (b[0] * d[1] - b[1] * d[0]);
            assert!(det.abs() > 1e-9);
            total += det.abs() / 6.0;
        }
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn gaussian_mixture_matches_independent_evaluation() {
        let s = spec(MeshStyle::Holed, 2000);
        let mesh = gen_mesh(&s).unwrap();
        let field = gen_field(&mesh, &s).unwrap();
        let g = GaussianMixture::from_seed(7, 2);
        for (i, p) in mesh.vertices().enumerate() {
            let mut expect = 0.0;
            for k in 0..5 {
                let dx = p[0] - g.centers[k][0];
                let dy = p[1] - g.centers[k][1];
                expect += g.amplitudes[k] * (-(dx * dx + dy * dy) / (g.widths[k] * g.widths[k])).exp();
            }
            assert_eq!(field.values()[i].to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn field_kinds_have_expected_ranges() {
        let s = spec(MeshStyle::Jittered, 3000);
        let mesh = gen_mesh(&s).unwrap();
        let noise = gen_field(&mesh, &SynthSpec { field: FieldKind::WhiteNoise, ..s.clone() }).unwrap();
        assert!(noise.values().iter().all(|v| (-1.0..1.0).contains(v)));
        assert!(noise.range() > 1.9);
        let zero = gen_field(&mesh, &SynthSpec { field: FieldKind::Constant, ..s.clone() }).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let sine = MultiSine::from_seed(7, 2);
        assert_eq!(sine.amplitudes.len(), 20);
        for w in &sine.frequencies {
            assert!(w.iter().map(|c| c * c).sum::<f64>().sqrt() <= MultiSine::MAX_FREQUENCY + 1e-9);
        }
    }

    #[test]
    fn white_noise_is_near_the_quantized_entropy_estimate() {
        use crate::codec::CodecRegistry;
        use crate::pipeline::compress_baseline;
        let s = SynthSpec { field: FieldKind::WhiteNoise, ..spec(MeshStyle::Jittered, 20_000) };
        let field = gen_field(&gen_mesh(&s).unwrap(), &s).unwrap();
        let reg = CodecRegistry::new();
        for tau_rel in [1e-6, 1e-2] {
            let tau = tau_rel * field.range();
            let comp = compress_baseline(&field, tau, 0, 0, &reg).unwrap();
            let cr = 8.0 * field.len() as f64 / comp.compressed_bytes() as f64;
            let estimate = 64.0 / ((field.range() / tau).log2() + 1.0).ceil();
            assert!((cr - estimate).abs() <= 0.2 * estimate, "tau {tau_rel}: CR {cr}, estimate {estimate}");
        }
    }

    #[test]
    fn names_round_trip() {
        for k in [FieldKind::GaussianMixture, FieldKind::MultiSine, FieldKind::WhiteNoise, FieldKind::Constant] {
            assert_eq!(k.name().parse::<FieldKind>().unwrap(), k);
        }
        for s in [MeshStyle::Jittered, MeshStyle::Graded, MeshStyle::Holed] {
            assert_eq!(s.to_string().parse::<MeshStyle>().unwrap(), s);
        }
        assert!("blob".parse::<MeshStyle>().is_err());
        assert!(SynthSpec { n_target: 3, ..SynthSpec::default() }.validate().is_err());
        assert!(SynthSpec { dim: 1, ..SynthSpec::default() }.validate().is_err());
    }
}
