//! Error-bounded multi-component lossy compression for fields on
//! unstructured meshes.
//!
//! A field is split into a coarse rectilinear-grid approximation and
//! per-vertex residuals; both are compressed with an error-bounded codec
//! under budgets chosen so the reconstruction never leaves the requested
//! pointwise bound.
//!
//! ```
//! use umc_core::{build_grid, compress, decompress, datagen, CodecRegistry, CompressOptions};
//! use umc_core::{BackInterpKind, ErrorBudget, GridBuildConfig, Layout};
//!
//! let spec = datagen::SynthSpec { n_target: 400, ..Default::default() };
//! let mesh = datagen::gen_mesh(&spec).unwrap();
//! let field = datagen::gen_field(&mesh, &spec).unwrap();
//! let (_, coarse) = build_grid(&mesh, &GridBuildConfig::default()).unwrap();
//! let layout = Layout::new(coarse.grid, coarse.mapping, BackInterpKind::Nearest, None).unwrap();
//! let registry = CodecRegistry::default();
//! let budget = ErrorBudget::relative(1e-3, 0.5).unwrap();
//! let archive = compress(&field, &layout, &budget, &CompressOptions::default(), &registry).unwrap();
//! let back = decompress(&archive, Some(&layout), &registry).unwrap();
//! let worst = field.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
//! assert!(worst <= archive.tau_abs);
//! ```

pub mod binio;
pub mod codec;
pub mod datagen;
pub mod error;
pub mod grid_builder;
pub mod interp;
pub mod mesh_core;
pub mod metrics;
pub mod pipeline;

pub use codec::{CodecRegistry, CodecSpec, EncodedComponent, ExternalCodec, Predictor};
pub use error::{Error, Result};
pub use grid_builder::{build_grid, Coarsened, GridBuildConfig, GridInit};
pub use interp::{BackInterpKind, BackInterpolator, FillPolicy, GridField};
pub use mesh_core::{Field, MappingMode, MappingTable, Mesh, MeshFormat, RectGrid};
pub use metrics::{Method, RunRecord};
pub use pipeline::{
    compress, compress_baseline_archive, decompress, Archive, BoundKind, CompressOptions, ErrorBudget, Layout, Payload,
};
