//! Mesh, field, grid and mapping data model plus file formats.

mod grid;
pub mod io;
mod mapping;
mod mesh;

pub use grid::RectGrid;
pub(crate) use grid::strides_of;
pub use io::MeshFormat;
pub use mapping::{MappingMode, MappingTable};
pub use mesh::{Field, Mesh};
