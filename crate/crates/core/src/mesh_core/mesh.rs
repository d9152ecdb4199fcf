use crate::error::{Error, Result};

/// Unstructured mesh: vertex coordinates plus uniform-arity cell connectivity.
///
/// Coordinates are stored flat, `dim` values per vertex, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    arity: usize,
    cells: Vec<usize>,
}

impl Mesh {
    /// Validates and builds a mesh. `arity` may be 0 only for a point cloud
    /// (no cells). Dimension 1 is accepted for edge-chain meshes.
    pub fn new(dim: usize, coords: Vec<f64>, arity: usize, cells: Vec<usize>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dimension {dim} not in 1..=3")));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidMesh(format!(
                "{} coordinates do not form vertices of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { vertex: pos / dim });
        }
        if cells.is_empty() {
            if arity == 1 {
                return Err(Error::InvalidMesh("cell arity 1".into()));
            }
        } else if arity < 2 || cells.len() % arity != 0 {
            return Err(Error::InvalidMesh(format!(
                "{} connectivity entries do not form cells of arity {arity}",
                cells.len()
            )));
        }
        let n_v = coords.len() / dim;
        if let Some(&bad) = cells.iter().find(|&&c| c >= n_v) {
            return Err(Error::IndexOutOfRange { index: bad as u64, limit: n_v as u64 });
        }
        Ok(Self { dim, coords, arity, cells })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.cells.len() / self.arity
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn cell(&self, j: usize) -> &[usize] {
        &self.cells[j * self.arity..(j + 1) * self.arity]
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        // chunks_exact panics on a zero chunk size.
        self.cells.chunks_exact(self.arity.max(1))
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn connectivity(&self) -> &[usize] {
        &self.cells
    }

    /// Per-axis (min, max) over all vertices.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.vertices() {
            for (d, &c) in p.iter().enumerate() {
                b[d].0 = b[d].0.min(c);
                b[d].1 = b[d].1.max(c);
            }
        }
        b
    }

    #[cfg(test)]
    pub(crate) fn corrupt_coord_for_test(&mut self, pos: usize, v: f64) {
        self.coords[pos] = v;
    }
}

/// Scalar field sampled at mesh vertices, in vertex file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    name: String,
    values: Vec<f64>,
}

impl Field {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { name: name.into(), values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails unless the field has one value per mesh vertex.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.num_vertices() {
            return Err(Error::LengthMismatch {
                expected: mesh.num_vertices(),
                actual: self.values.len(),
            });
        }
        Ok(())
    }

    /// max - min, or 0 for an empty field.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_valid_triangle() {
        let m = Mesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], 3, vec![0, 1, 2]).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.num_vertices(), 3);
        assert_eq!(m.num_cells(), 1);
        assert_eq!(m.vertex(2), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_out_of_range_connectivity() {
        let err = Mesh::new(2, vec![0.0; 6], 3, vec![0, 1, 5]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 5, limit: 3 }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Mesh::new(2, vec![0.0, 0.0, f64::NAN, 0.0], 0, vec![]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCoordinate { vertex: 1 }));
        assert!(matches!(
            Field::new("f", vec![1.0, f64::INFINITY]),
            Err(Error::NonFiniteValue { index: 1 })
        ));
    }

    #[test]
    fn point_cloud_has_no_cells() {
        let m = Mesh::new(3, vec![0.0; 9], 0, vec![]).unwrap();
        assert_eq!(m.num_cells(), 0);
        assert_eq!(m.cells().count(), 0);
    }

    #[test]
    fn field_range() {
        let f = Field::new("f", vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(f.range(), 4.0);
    }
}
