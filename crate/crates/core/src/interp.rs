//! Forward interpolation of vertex values onto grid nodes (cluster mean),
//! back-interpolation from nodes to vertices, and residuals.

use crate::error::{Error, Result};
use crate::mesh_core::{Field, MappingMode, MappingTable, Mesh, RectGrid};

/// Value given to grid nodes that no vertex maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillPolicy {
    #[default]
    Zero,
    /// Copy the nearest visited node along the last (fastest) axis; rows
    /// with no visited node stay zero.
    NearestAlongFastestAxis,
}

/// Forward interpolation operator. Only the cluster mean is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForwardKind {
    #[default]
    ClusterMean,
}

/// Grid component `x1`: one value per grid node, or per visited node in
/// seed mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    /// Shape used for N-D prediction: the grid shape (dense) or `[len]`.
    pub shape: Vec<usize>,
    pub mode: MappingMode,
}

/// Cluster-mean interpolation: node `j` receives the mean of the vertices
/// assigned to it, accumulated in a single pass.
pub fn interpolate_to_grid(
    field: &Field,
    map: &MappingTable,
    grid: &RectGrid,
    fill: FillPolicy,
) -> Result<GridField> {
    check_lengths(field.len(), map)?;
    let len = map.component_len(grid);
    let mut sum = vec![0.0f64; len];
    let mut count = vec![0u32; len];
    for (&m, &x) in map.assignments().iter().zip(field.values()) {
        sum[m] += x;
        count[m] += 1;
    }
    let mut values: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / f64::from(c) } else { 0.0 })
        .collect();

    let (shape, mode) = match map.mode() {
        MappingMode::Dense => (grid.shape(), MappingMode::Dense),
        MappingMode::Seed => (vec![len], MappingMode::Seed),
    };
    if fill == FillPolicy::NearestAlongFastestAxis && mode == MappingMode::Dense {
        fill_along_fastest(&mut values, &count, *shape.last().unwrap());
    }
    Ok(GridField { values, shape, mode })
}

fn fill_along_fastest(values: &mut [f64], count: &[u32], row_len: usize) {
    for (row, counts) in values.chunks_mut(row_len).zip(count.chunks(row_len)) {
        let visited: Vec<usize> = (0..row_len).filter(|&i| counts[i] > 0).collect();
        if visited.is_empty() {
            continue;
        }
        let mut next = 0;
        for i in 0..row_len {
            if counts[i] > 0 {
                continue;
            }
            while next + 1 < visited.len() && visited[next + 1] <= i {
                next += 1;
            }
            let left = visited[next];
            let pick = if left > i {
                left
            } else if next + 1 < visited.len() && visited[next + 1] - i < i - left {
                visited[next + 1]
            } else {
                left
            };
            row[i] = row[pick];
        }
    }
}

fn check_lengths(n: usize, map: &MappingTable) -> Result<()> {
    if n != map.num_vertices() {
        return Err(Error::LengthMismatch { expected: map.num_vertices(), actual: n });
    }
    Ok(())
}

/// Back-interpolation operator `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackInterpKind {
    #[default]
    Nearest,
    Multilinear,
}

impl BackInterpKind {
    /// Upper bound on the sum of absolute interpolation weights for any
    /// vertex. Both operators use nonnegative weights summing to one.
    pub fn coeff_abs_sum(self) -> f64 {
        1.0
    }
}

/// Precomputed back-interpolation for one mesh, grid and mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum BackInterpolator {
    /// Lookup `x1[m_i]`.
    Nearest { assignments: Vec<usize> },
    /// `corners` holds `2^dim` node indices per vertex, `weights` the
    /// matching blend weights.
    Multilinear { corners_per_vertex: usize, corners: Vec<usize>, weights: Vec<f64> },
}

impl BackInterpolator {
    pub fn nearest(map: &MappingTable) -> Self {
        Self::Nearest { assignments: map.assignments().to_vec() }
    }

    pub fn multilinear(mesh: &Mesh, grid: &RectGrid, map: &MappingTable) -> Result<Self> {
        if map.mode() == MappingMode::Seed {
            return Err(Error::SeedModeUnsupported);
        }
        if mesh.dim() != grid.dim() {
            return Err(Error::LengthMismatch { expected: grid.dim(), actual: mesh.dim() });
        }
        check_lengths(mesh.num_vertices(), map)?;
        let dim = grid.dim();
        let per = 1usize << dim;
        let strides = grid.strides();
        let mut corners = Vec::with_capacity(per * mesh.num_vertices());
        let mut weights = Vec::with_capacity(per * mesh.num_vertices());
        let mut lo = vec![0usize; dim];
        let mut t = vec![0.0f64; dim];
        for p in mesh.vertices() {
            for d in 0..dim {
                let (i, frac) = enclosing_interval(grid.axis(d), p[d]);
                lo[d] = i;
                t[d] = frac;
            }
            for corner in 0..per {
                let mut lin = 0;
                let mut w = 1.0;
                for d in 0..dim {
                    let upper = (corner >> (dim - 1 - d)) & 1 == 1;
                    let single = grid.axis(d).len() == 1;
                    let idx = if upper && !single { lo[d] + 1 } else { lo[d] };
                    lin += idx * strides[d];
                    w *= match (single, upper) {
                        (true, false) => 1.0,
                        (true, true) => 0.0,
                        (false, false) => 1.0 - t[d],
                        (false, true) => t[d],
                    };
                }
                corners.push(lin);
                weights.push(w);
            }
        }
        Ok(Self::Multilinear { corners_per_vertex: per, corners, weights })
    }

    pub fn build(kind: BackInterpKind, mesh: Option<&Mesh>, grid: &RectGrid, map: &MappingTable) -> Result<Self> {
        match kind {
            BackInterpKind::Nearest => Ok(Self::nearest(map)),
            BackInterpKind::Multilinear => {
                let mesh = mesh.ok_or(Error::MissingGeometry)?;
                Self::multilinear(mesh, grid, map)
            }
        }
    }

    pub fn kind(&self) -> BackInterpKind {
        match self {
            Self::Nearest { .. } => BackInterpKind::Nearest,
            Self::Multilinear { .. } => BackInterpKind::Multilinear,
        }
    }

    pub fn num_vertices(&self) -> usize {
        match self {
            Self::Nearest { assignments } => assignments.len(),
            Self::Multilinear { corners_per_vertex, corners, .. } => corners.len() / corners_per_vertex,
        }
    }

    /// Interpolation weights of vertex `i` as (node, weight) pairs.
    pub fn weights_of(&self, i: usize) -> Vec<(usize, f64)> {
        match self {
            Self::Nearest { assignments } => vec![(assignments[i], 1.0)],
            Self::Multilinear { corners_per_vertex: per, corners, weights } => {
                let r = i * per..(i + 1) * per;
                corners[r.clone()].iter().copied().zip(weights[r].iter().copied()).collect()
            }
        }
    }

    /// `g(x1)` at every vertex.
    pub fn apply(&self, grid_values: &[f64]) -> Vec<f64> {
        match self {
            Self::Nearest { assignments } => assignments.iter().map(|&m| grid_values[m]).collect(),
            Self::Multilinear { corners_per_vertex: per, corners, weights } => corners
                .chunks_exact(*per)
                .zip(weights.chunks_exact(*per))
                .map(|(c, w)| c.iter().zip(w).map(|(&j, &w)| w * grid_values[j]).sum())
                .collect(),
        }
    }
}

/// Cell `[axis[i], axis[i+1]]` containing `c` and the fractional offset in
/// it, clamped to `[0, 1]`. Single-node axes return `(0, 0)`.
fn enclosing_interval(axis: &[f64], c: f64) -> (usize, f64) {
    if axis.len() == 1 {
        return (0, 0.0);
    }
    let j = axis.partition_point(|&a| a <= c);
    let i = j.clamp(1, axis.len() - 1) - 1;
    let t = (c - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t.clamp(0.0, 1.0))
}

/// Back-interpolates a grid field with the given operator.
pub fn back_interpolate(gridfield: &GridField, back: &BackInterpolator) -> Vec<f64> {
    back.apply(&gridfield.values)
}

/// Residuals `x2 = x - g(x1)`.
pub fn compute_residuals(field: &Field, gridfield: &GridField, back: &BackInterpolator) -> Result<Vec<f64>> {
    if field.len() != back.num_vertices() {
        return Err(Error::LengthMismatch { expected: back.num_vertices(), actual: field.len() });
    }
    let approx = back.apply(&gridfield.values);
    Ok(field.values().iter().zip(&approx).map(|(x, g)| x - g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_grid(axis: Vec<f64>) -> RectGrid {
        RectGrid::new(vec![axis]).unwrap()
    }

    #[test]
    fn cluster_mean_of_three() {
        let grid = line_grid(vec![0.0, 1.0]);
        let map = MappingTable::dense(vec![1, 1, 1]);
        let field = Field::new("f", vec![1.0, 2.0, 3.0]).unwrap();
        let gf = interpolate_to_grid(&field, &map, &grid, FillPolicy::Zero).unwrap();
        assert_eq!(gf.values, vec![0.0, 2.0]);
    }

    #[test]
    fn single_vertex_cluster_is_exact() {
        let grid = line_grid(vec![0.0, 1.0, 2.0]);
        let map = MappingTable::dense(vec![2, 0]);
        let field = Field::new("f", vec![0.3, -7.1]).unwrap();
        let gf = interpolate_to_grid(&field, &map, &grid, FillPolicy::Zero).unwrap();
        assert_eq!(gf.values, vec![-7.1, 0.0, 0.3]);
        let back = BackInterpolator::nearest(&map);
        assert_eq!(compute_residuals(&field, &gf, &back).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn nearest_lookup() {
        let gf = GridField { values: (0..8).map(|i| if i == 5 { 7.25 } else { 0.0 }).collect(), shape: vec![8], mode: MappingMode::Dense };
        let back = BackInterpolator::Nearest { assignments: vec![5] };
        assert_eq!(back_interpolate(&gf, &back), vec![7.25]);
    }

    #[test]
    fn multilinear_1d_blend() {
        let grid = line_grid(vec![0.0, 1.0]);
        let mesh = Mesh::new(1, vec![0.3], 0, vec![]).unwrap();
        let map = MappingTable::dense(vec![0]);
        let back = BackInterpolator::multilinear(&mesh, &grid, &map).unwrap();
        let out = back.apply(&[0.0, 10.0]);
        assert!((out[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn multilinear_rejects_seed_mode() {
        let grid = line_grid(vec![0.0, 1.0]);
        let mesh = Mesh::new(1, vec![0.3], 0, vec![]).unwrap();
        let map = MappingTable::seed(vec![0], vec![0]).unwrap();
        assert!(matches!(
            BackInterpolator::multilinear(&mesh, &grid, &map),
            Err(Error::SeedModeUnsupported)
        ));
    }

    #[test]
    fn multilinear_degenerate_axis() {
        let grid = RectGrid::new(vec![vec![0.0, 2.0], vec![5.0]]).unwrap();
        let mesh = Mesh::new(2, vec![0.5, 5.0], 0, vec![]).unwrap();
        let map = MappingTable::dense(vec![0]);
        let back = BackInterpolator::multilinear(&mesh, &grid, &map).unwrap();
        let w: f64 = back.weights_of(0).iter().map(|(_, w)| w).sum();
        assert_eq!(w, 1.0);
        assert_eq!(back.apply(&[4.0, 8.0]), vec![5.0]);
    }

    #[test]
    fn fill_nearest_along_row() {
        let grid = RectGrid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        // row 0: only node 1 visited; row 1: nodes 4 and 7
        let map = MappingTable::dense(vec![1, 4, 7]);
        let field = Field::new("f", vec![5.0, 1.0, 2.0]).unwrap();
        let gf = interpolate_to_grid(&field, &map, &grid, FillPolicy::NearestAlongFastestAxis).unwrap();
        assert_eq!(gf.values, vec![5.0, 5.0, 5.0, 5.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn seed_mode_grid_field_is_compact() {
        let grid = RectGrid::new(vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let map = MappingTable::seed(vec![0, 1, 1], vec![0, 8]).unwrap();
        let field = Field::new("f", vec![1.0, 2.0, 4.0]).unwrap();
        let gf = interpolate_to_grid(&field, &map, &grid, FillPolicy::Zero).unwrap();
        assert_eq!(gf.values, vec![1.0, 3.0]);
        assert_eq!(gf.shape, vec![2]);
    }
}
