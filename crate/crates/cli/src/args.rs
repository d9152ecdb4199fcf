use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use umc_core::datagen::{FieldKind, MeshStyle};
use umc_core::{BackInterpKind, BoundKind, FillPolicy, GridBuildConfig};

#[derive(Debug, Parser)]
#[command(name = "umc", version, about = "Error-bounded multi-component compression for unstructured-mesh fields")]
pub struct Cli {
    /// key = value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic mesh and field.
    Synth(SynthArgs),
    /// Build the rectilinear grid and vertex mapping for a mesh.
    BuildGrid(BuildGridArgs),
    /// Compress a field.
    Compress(CompressArgs),
    /// Reconstruct a field from an archive.
    Decompress(DecompressArgs),
    /// Check a reconstruction against the original and a bound.
    Verify(VerifyArgs),
    /// Run both methods over a grid of hyperparameters and report metrics.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauKind {
    Rel,
    Abs,
}

impl From<TauKind> for BoundKind {
    fn from(k: TauKind) -> Self {
        match k {
            TauKind::Rel => BoundKind::Relative,
            TauKind::Abs => BoundKind::Absolute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Interp {
    Nearest,
    Multilinear,
}

impl From<Interp> for BackInterpKind {
    fn from(k: Interp) -> Self {
        match k {
            Interp::Nearest => BackInterpKind::Nearest,
            Interp::Multilinear => BackInterpKind::Multilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fill {
    Zero,
    Nearest,
}

impl From<Fill> for FillPolicy {
    fn from(f: Fill) -> Self {
        match f {
            Fill::Zero => FillPolicy::Zero,
            Fill::Nearest => FillPolicy::NearestAlongFastestAxis,
        }
    }
}

fn parse_percentile(s: &str) -> Result<f64, String> {
    let k: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if k > 0.0 && k <= 100.0 {
        Ok(k)
    } else {
        Err(format!("percentile must lie in (0, 100], got {k}"))
    }
}

fn parse_unit_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("expected a value in (0, 1], got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

/// External codec registration, `ID=COMMAND`.
#[derive(Debug, Clone)]
pub struct ExternalSpec {
    pub id: u8,
    pub command: String,
}

fn parse_external(s: &str) -> Result<ExternalSpec, String> {
    let (id, command) = s.split_once('=').ok_or_else(|| format!("expected ID=COMMAND, got {s:?}"))?;
    let id = id.trim().parse().map_err(|e| format!("codec id {id:?}: {e}"))?;
    if command.trim().is_empty() {
        return Err("empty external codec command".into());
    }
    Ok(ExternalSpec { id, command: command.trim().to_owned() })
}

#[derive(Debug, Clone, Args)]
pub struct GridOpts {
    /// Percentile of nearest-neighbour distances used as grid spacing.
    #[arg(long, default_value_t = 50.0, value_parser = parse_percentile)]
    pub percentile: f64,
    /// Maximum nodes per axis.
    #[arg(long = "gmax", visible_alias = "g-max", default_value_t = 4096, value_parser = clap::value_parser!(u64).range(2..))]
    pub g_max: u64,
    /// Percentile increment while an axis exceeds g-max.
    #[arg(long, default_value_t = 5.0, value_parser = parse_positive)]
    pub delta: f64,
    /// Visited fraction below which the mapping switches to seed mode.
    #[arg(long, default_value_t = 0.35, value_parser = parse_unit_fraction)]
    pub seed_threshold: f64,
}

impl GridOpts {
    pub fn config(&self, percentile: f64) -> GridBuildConfig {
        GridBuildConfig {
            percentile_k: percentile,
            g_max: self.g_max as usize,
            delta: self.delta,
            seed_mode_threshold: self.seed_threshold,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CodecOpts {
    /// Codec id: 0 built-in predictor/quantizer, 1 verbatim, 128+ external.
    #[arg(long, default_value_t = 0)]
    pub codec: u8,
    /// Lossless backend id for the built-in codecs: 0 zero-run, 1 raw.
    #[arg(long, default_value_t = 0)]
    pub backend: u8,
    /// Register an external codec program, `ID=COMMAND`. Repeatable.
    #[arg(long = "external", value_name = "ID=COMMAND", value_parser = parse_external)]
    pub externals: Vec<ExternalSpec>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Target vertex count.
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    #[arg(long, default_value_t = MeshStyle::Holed)]
    pub style: MeshStyle,
    #[arg(long, default_value_t = FieldKind::GaussianMixture)]
    pub kind: FieldKind,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output mesh; `.csv`/`.txt` selects the ASCII format.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Output field.
    #[arg(long)]
    pub field: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildGridArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Output grid file.
    #[arg(long = "out-grid", visible_alias = "grid")]
    pub grid: PathBuf,
    /// Output mapping file.
    #[arg(long = "out-map", visible_alias = "mapping")]
    pub mapping: PathBuf,
    #[command(flatten)]
    pub grid_opts: GridOpts,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Output archive.
    #[arg(long)]
    pub out: PathBuf,
    /// Mesh; needed for multilinear back-interpolation or to build the grid
    /// on the fly.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, requires = "mapping")]
    pub grid: Option<PathBuf>,
    #[arg(long, requires = "grid")]
    pub mapping: Option<PathBuf>,
    /// Error bound.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = TauKind::Rel)]
    pub tau_kind: TauKind,
    /// Share of the bound given to the grid component.
    #[arg(long, default_value_t = umc_core::pipeline::DEFAULT_RHO, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = Interp::Nearest)]
    pub interp: Interp,
    #[arg(long, value_enum, default_value_t = Fill::Zero)]
    pub fill: Fill,
    /// Compress the flattened field as a single 1-D stream instead.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub codec: CodecOpts,
    #[command(flatten)]
    pub grid_opts: GridOpts,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// Output field.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, requires = "mapping")]
    pub grid: Option<PathBuf>,
    #[arg(long, requires = "grid")]
    pub mapping: Option<PathBuf>,
    #[arg(long = "external", value_name = "ID=COMMAND", value_parser = parse_external)]
    pub externals: Vec<ExternalSpec>,
    #[command(flatten)]
    pub grid_opts: GridOpts,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Original field.
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub reconstructed: PathBuf,
    /// Mesh both fields must conform to.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = TauKind::Rel)]
    pub tau_kind: TauKind,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub field: PathBuf,
    /// Dataset id for the report; defaults to the mesh file stem.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Percentile values, comma separated.
    #[arg(long = "percentile", value_delimiter = ',', default_value = "50", value_parser = parse_percentile)]
    pub percentiles: Vec<f64>,
    /// ρ values, comma separated.
    #[arg(long = "rho", value_delimiter = ',', default_value = "0.5", allow_negative_numbers = true)]
    pub rhos: Vec<f64>,
    /// Bounds, comma separated.
    #[arg(long = "tau", value_delimiter = ',', default_value = "1e-4,1e-3,1e-2", allow_negative_numbers = true)]
    pub taus: Vec<f64>,
    #[arg(long, value_enum, default_value_t = TauKind::Rel)]
    pub tau_kind: TauKind,
    #[arg(long, value_enum, default_value_t = Interp::Nearest)]
    pub interp: Interp,
    #[arg(long, value_enum, default_value_t = Fill::Zero)]
    pub fill: Fill,
    #[arg(long = "gmax", visible_alias = "g-max", default_value_t = 4096, value_parser = clap::value_parser!(u64).range(2..))]
    pub g_max: u64,
    #[arg(long, default_value_t = 5.0, value_parser = parse_positive)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.35, value_parser = parse_unit_fraction)]
    pub seed_threshold: f64,
    #[command(flatten)]
    pub codec: CodecOpts,
    /// Parallel cells; defaults to the number of CPUs.
    #[arg(long, env = "UMC_JOBS", value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Build each mapping once per percentile and share it across cells.
    #[arg(long)]
    pub reuse_map: bool,
    /// CSV report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

impl SweepArgs {
    pub fn grid_config(&self, percentile: f64) -> GridBuildConfig {
        GridBuildConfig {
            percentile_k: percentile,
            g_max: self.g_max as usize,
            delta: self.delta,
            seed_mode_threshold: self.seed_threshold,
        }
    }
}
