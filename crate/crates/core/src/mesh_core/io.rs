//! On-disk formats for meshes, fields, grids and mapping tables.
//!
//! All binary formats are little-endian with a 4-byte magic and a u16
//! version. Vertex order is always the order of the input file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::binio::{put_f64, put_u16, put_u64, put_u8, Reader};
use crate::error::{Error, Result};

use super::{Field, MappingMode, MappingTable, Mesh, RectGrid};

pub const MESH_MAGIC: &[u8; 4] = b"UMCM";
pub const GRID_MAGIC: &[u8; 4] = b"UMCG";
pub const MAPPING_MAGIC: &[u8; 4] = b"UMCP";
pub const FIELD_MAGIC: &[u8; 4] = b"UMCF";
pub const FORMAT_VERSION: u16 = 1;

const CSV_HEADER_PREFIX: &str = "# umc-mesh";
const CSV_CELLS_SENTINEL: &str = "cells:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    UmcBin,
    CsvAscii,
}

impl MeshFormat {
    /// `.csv` and `.txt` are ASCII, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv" | "txt") => Self::CsvAscii,
            _ => Self::UmcBin,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "umc-bin" => Ok(Self::UmcBin),
            "csv-ascii" => Ok(Self::CsvAscii),
            other => Err(Error::InvalidConfig(format!("unknown mesh format {other:?}"))),
        }
    }
}

fn check_version(r: &mut Reader<'_>) -> Result<()> {
    let v = r.u16()?;
    if v != FORMAT_VERSION {
        return Err(r.fail(format!("unsupported version {v}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- meshes

pub fn mesh_to_bytes(mesh: &Mesh, format: MeshFormat) -> Vec<u8> {
    match format {
        MeshFormat::UmcBin => mesh_to_bin(mesh),
        MeshFormat::CsvAscii => mesh_to_csv(mesh).into_bytes(),
    }
}

pub fn mesh_from_bytes(bytes: &[u8], format: MeshFormat) -> Result<Mesh> {
    match format {
        MeshFormat::UmcBin => mesh_from_bin(bytes),
        MeshFormat::CsvAscii => {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| Error::MalformedFile(format!("not UTF-8: {e}")))?;
            mesh_from_csv(text)
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh> {
    mesh_from_bytes(&fs::read(path)?, format)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    if let Some(pos) = mesh.coords().iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFiniteCoordinate { vertex: pos / mesh.dim() });
    }
    fs::write(path, mesh_to_bytes(mesh, format))?;
    Ok(())
}

fn mesh_to_bin(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + mesh.coords().len() * 8 + mesh.connectivity().len() * 8);
    out.extend_from_slice(MESH_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u8(&mut out, mesh.dim() as u8);
    put_u8(&mut out, mesh.arity() as u8);
    put_u64(&mut out, mesh.num_vertices() as u64);
    put_u64(&mut out, mesh.num_cells() as u64);
    for &c in mesh.coords() {
        put_f64(&mut out, c);
    }
    for &i in mesh.connectivity() {
        put_u64(&mut out, i as u64);
    }
    out
}

fn mesh_from_bin(bytes: &[u8]) -> Result<Mesh> {
    let mut r = Reader::for_file(bytes);
    r.magic(MESH_MAGIC)?;
    check_version(&mut r)?;
    let dim = r.u8()? as usize;
    let arity = r.u8()? as usize;
    if dim == 0 {
        return Err(Error::MalformedFile("dimension 0".into()));
    }
    let n_v = r.count(8 * dim)?;
    let n_cells = r.u64()?;
    let n_coords = n_v * dim;
    let coords = (0..n_coords).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let n_idx = usize::try_from(n_cells)
        .ok()
        .and_then(|n| n.checked_mul(arity))
        .filter(|&n| n.checked_mul(8).is_some_and(|b| b == r.remaining()))
        .ok_or_else(|| Error::MalformedFile(format!("{n_cells} cells do not match file size")))?;
    let mut cells = Vec::with_capacity(n_idx);
    for _ in 0..n_idx {
        let i = r.u64()?;
        if i >= n_v as u64 {
            return Err(Error::IndexOutOfRange { index: i, limit: n_v as u64 });
        }
        cells.push(i as usize);
    }
    r.finish()?;
    Mesh::new(dim, coords, arity, cells).map_err(|e| match e {
        Error::InvalidMesh(m) => Error::MalformedFile(m),
        other => other,
    })
}

fn mesh_to_csv(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_HEADER_PREFIX} dim={} arity={}", mesh.dim(), mesh.arity());
    for p in mesh.vertices() {
        // Debug formatting of f64 is the shortest string that round-trips.
        let row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    let _ = writeln!(s, "{CSV_CELLS_SENTINEL}");
    for cell in mesh.cells() {
        let row: Vec<String> = cell.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn parse_header_key(header: &str, key: &str) -> Result<usize> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .ok_or_else(|| Error::MalformedFile(format!("header lacks {key}=")))?
        .parse()
        .map_err(|e| Error::MalformedFile(format!("bad {key}: {e}")))
}

fn mesh_from_csv(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::MalformedFile("empty file".into()))?;
    if !header.starts_with(CSV_HEADER_PREFIX) {
        return Err(Error::MalformedFile(format!("missing {CSV_HEADER_PREFIX:?} header")));
    }
    let dim = parse_header_key(header, "dim")?;
    let arity = parse_header_key(header, "arity")?;
    if !(1..=3).contains(&dim) {
        return Err(Error::MalformedFile(format!("dimension {dim}")));
    }

    let mut coords = Vec::new();
    let mut cells = Vec::new();
    let mut in_cells = false;
    for (lineno, line) in lines {
        let line = line.trim();
        if line == CSV_CELLS_SENTINEL {
            if in_cells {
                return Err(Error::MalformedFile("duplicate cells: sentinel".into()));
            }
            in_cells = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let width = if in_cells { arity } else { dim };
        if fields.len() != width {
            return Err(Error::MalformedFile(format!(
                "line {}: {} entries, expected {width}",
                lineno + 1,
                fields.len()
            )));
        }
        for f in fields {
            if in_cells {
                let i: usize = f
                    .parse()
                    .map_err(|e| Error::MalformedFile(format!("line {}: {e}", lineno + 1)))?;
                cells.push(i);
            } else {
                let c: f64 = f
                    .parse()
                    .map_err(|e| Error::MalformedFile(format!("line {}: {e}", lineno + 1)))?;
                coords.push(c);
            }
        }
    }
    if !in_cells {
        return Err(Error::MalformedFile("missing cells: sentinel".into()));
    }
    Mesh::new(dim, coords, arity, cells).map_err(|e| match e {
        Error::InvalidMesh(m) => Error::MalformedFile(m),
        other => other,
    })
}

// ---------------------------------------------------------------- grids

pub fn grid_to_bytes(grid: &RectGrid) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(GRID_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u8(&mut out, grid.dim() as u8);
    for axis in grid.axes() {
        put_u64(&mut out, axis.len() as u64);
        for &c in axis {
            put_f64(&mut out, c);
        }
    }
    out
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<RectGrid> {
    let mut r = Reader::for_file(bytes);
    r.magic(GRID_MAGIC)?;
    check_version(&mut r)?;
    let dim = r.u8()? as usize;
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let n = r.count(8)?;
        axes.push((0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
    }
    r.finish()?;
    RectGrid::new(axes).map_err(|e| Error::MalformedFile(e.to_string()))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<RectGrid> {
    grid_from_bytes(&fs::read(path)?)
}

pub fn save_grid(grid: &RectGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, grid_to_bytes(grid))?;
    Ok(())
}

// ---------------------------------------------------------------- mappings

pub fn mapping_to_bytes(map: &MappingTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(15 + 8 * map.num_vertices());
    out.extend_from_slice(MAPPING_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u8(&mut out, match map.mode() {
        MappingMode::Dense => 0,
        MappingMode::Seed => 1,
    });
    put_u64(&mut out, map.num_vertices() as u64);
    for &m in map.assignments() {
        put_u64(&mut out, m as u64);
    }
    if let Some(visited) = map.visited_nodes() {
        put_u64(&mut out, visited.len() as u64);
        for &j in visited {
            put_u64(&mut out, j as u64);
        }
    }
    out
}

pub fn mapping_from_bytes(bytes: &[u8]) -> Result<MappingTable> {
    let mut r = Reader::for_file(bytes);
    r.magic(MAPPING_MAGIC)?;
    check_version(&mut r)?;
    let mode = r.u8()?;
    let n_v = r.count(8)?;
    let assignments = (0..n_v).map(|_| r.u64().map(|m| m as usize)).collect::<Result<Vec<_>>>()?;
    let map = match mode {
        0 => MappingTable::dense(assignments),
        1 => {
            let n = r.count(8)?;
            let visited = (0..n).map(|_| r.u64().map(|m| m as usize)).collect::<Result<Vec<_>>>()?;
            MappingTable::seed(assignments, visited).map_err(|e| Error::MalformedFile(e.to_string()))?
        }
        other => return Err(Error::MalformedFile(format!("unknown mapping mode {other}"))),
    };
    r.finish()?;
    Ok(map)
}

pub fn load_mapping(path: impl AsRef<Path>) -> Result<MappingTable> {
    mapping_from_bytes(&fs::read(path)?)
}

pub fn save_mapping(map: &MappingTable, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mapping_to_bytes(map))?;
    Ok(())
}

// ---------------------------------------------------------------- fields

/// `UMCF`, version u16, name length u16 + UTF-8, n u64, values f64 LE.
pub fn field_to_bytes(field: &Field) -> Vec<u8> {
    let name = field.name().as_bytes();
    let name = &name[..name.len().min(u16::MAX as usize)];
    let mut out = Vec::with_capacity(16 + name.len() + 8 * field.len());
    out.extend_from_slice(FIELD_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u16(&mut out, name.len() as u16);
    out.extend_from_slice(name);
    put_u64(&mut out, field.len() as u64);
    for &v in field.values() {
        put_f64(&mut out, v);
    }
    out
}

pub fn field_from_bytes(bytes: &[u8]) -> Result<Field> {
    let mut r = Reader::for_file(bytes);
    r.magic(FIELD_MAGIC)?;
    check_version(&mut r)?;
    let len = r.u16()? as usize;
    let name = std::str::from_utf8(r.take(len)?)
        .map_err(|e| Error::MalformedFile(format!("field name: {e}")))?
        .to_owned();
    let n = r.count(8)?;
    let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Field::new(name, values)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    field_from_bytes(&fs::read(path)?)
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, field_to_bytes(field))?;
    Ok(())
}
