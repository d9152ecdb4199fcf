//! Rectilinear grid construction from mesh geometry, adaptive plane
//! coarsening, and the vertex-to-node mapping.
//!
//! Nothing here looks at field values: the grid and mapping depend on the
//! mesh alone, so one build serves every field and timestep on that mesh.

use crate::error::{Error, Result};
use crate::mesh_core::{strides_of, MappingTable, Mesh, RectGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct GridBuildConfig {
    /// Percentile of per-axis edge deltas used as the grid spacing, in (0, 100].
    pub percentile_k: f64,
    /// Nodes per axis must stay below this.
    pub g_max: usize,
    /// Percentile increment applied while an axis is too fine.
    pub delta: f64,
    /// Switch to seed mode when fewer than this fraction of nodes is visited.
    pub seed_mode_threshold: f64,
}

impl Default for GridBuildConfig {
    fn default() -> Self {
        Self { percentile_k: 50.0, g_max: 4096, delta: 5.0, seed_mode_threshold: 0.35 }
    }
}

impl GridBuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile_k > 0.0 && self.percentile_k <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "percentile {} not in (0, 100]",
                self.percentile_k
            )));
        }
        if self.g_max < 2 {
            return Err(Error::InvalidConfig(format!("g_max {} < 2", self.g_max)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta {} must be positive", self.delta)));
        }
        if !(self.seed_mode_threshold > 0.0 && self.seed_mode_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "seed threshold {} not in (0, 1]",
                self.seed_mode_threshold
            )));
        }
        Ok(())
    }
}

/// Per-axis multiset of absolute edge deltas and the vertex extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengthStats {
    pub deltas: Vec<Vec<f64>>,
    pub bounds: Vec<(f64, f64)>,
}

/// Local vertex pairs forming the edges of one cell.
pub fn cell_edges(dim: usize, arity: usize) -> Vec<(usize, usize)> {
    match (dim, arity) {
        (_, 2) => vec![(0, 1)],
        (3, 4) => vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        (_, 8) => vec![
            (0, 1), (1, 2), (2, 3), (3, 0),
            (4, 5), (5, 6), (6, 7), (7, 4),
            (0, 4), (1, 5), (2, 6), (3, 7),
        ],
        (_, n) => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

/// Collects |Δcoordinate| per axis for every edge of every cell. Shared
/// edges are counted once per cell.
pub fn traverse_mesh(mesh: &Mesh) -> Result<EdgeLengthStats> {
    if mesh.num_cells() == 0 {
        return Err(Error::DegenerateMesh);
    }
    let dim = mesh.dim();
    let edges = cell_edges(dim, mesh.arity());
    let mut deltas = vec![Vec::with_capacity(mesh.num_cells() * edges.len()); dim];
    for cell in mesh.cells() {
        for &(a, b) in &edges {
            let (pa, pb) = (mesh.vertex(cell[a]), mesh.vertex(cell[b]));
            for d in 0..dim {
                deltas[d].push((pa[d] - pb[d]).abs());
            }
        }
    }
    Ok(EdgeLengthStats { deltas, bounds: mesh.bounds() })
}

/// Point-cloud substitute for [`traverse_mesh`]: per-axis deltas between
/// each vertex and its nearest neighbour.
pub fn nearest_neighbor_stats(mesh: &Mesh) -> EdgeLengthStats {
    let dim = mesh.dim();
    let n = mesh.num_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mesh.vertex(a)[0].total_cmp(&mesh.vertex(b)[0]).then(a.cmp(&b)));
    let dist2 = |a: usize, b: usize| -> f64 {
        mesh.vertex(a).iter().zip(mesh.vertex(b)).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    let mut deltas = vec![Vec::with_capacity(n); dim];
    for (pos, &i) in order.iter().enumerate() {
        let x = mesh.vertex(i)[0];
        let mut best: Option<(f64, usize)> = None;
        let consider = |j: usize, best: &mut Option<(f64, usize)>| {
            let d = dist2(i, j);
            if best.map_or(true, |(bd, bj)| d < bd || (d == bd && j < bj)) {
                *best = Some((d, j));
            }
        };
        for &j in order[pos + 1..].iter() {
            let dx = mesh.vertex(j)[0] - x;
            if best.is_some_and(|(bd, _)| dx * dx > bd) {
                break;
            }
            consider(j, &mut best);
        }
        for &j in order[..pos].iter().rev() {
            let dx = x - mesh.vertex(j)[0];
            if best.is_some_and(|(bd, _)| dx * dx > bd) {
                break;
            }
            consider(j, &mut best);
        }
        if let Some((_, j)) = best {
            for d in 0..dim {
                deltas[d].push((mesh.vertex(i)[d] - mesh.vertex(j)[d]).abs());
            }
        }
    }
    EdgeLengthStats { deltas, bounds: mesh.bounds() }
}

/// Nearest-rank percentile over the nonzero samples: the element at 1-based
/// rank `ceil(k/100 * N)` of the ascending sort.
pub fn percentile(k: f64, samples: &[f64]) -> Result<f64> {
    nearest_rank(k, &nonzero_sorted(samples))
}

fn nonzero_sorted(samples: &[f64]) -> Vec<f64> {
    let mut kept: Vec<f64> = samples.iter().copied().filter(|&s| s != 0.0).collect();
    kept.sort_by(f64::total_cmp);
    kept
}

fn nearest_rank(k: f64, sorted: &[f64]) -> Result<f64> {
    let n = sorted.len();
    if n == 0 {
        return Err(Error::EmptyAfterFiltering);
    }
    let rank = ((k.clamp(0.0, 100.0) * n as f64) / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// How the spacing of one axis was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisReport {
    pub spacing: f64,
    /// Percentile actually used (after any increments).
    pub percentile: f64,
    /// Spacing fell back to `(max - min) / (g_max - 1)`.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridInit {
    pub grid: RectGrid,
    pub axes: Vec<AxisReport>,
}

/// Builds the uniform initial grid spanning the mesh bounding box.
pub fn grid_init(mesh: &Mesh, cfg: &GridBuildConfig) -> Result<GridInit> {
    cfg.validate()?;
    let stats = match traverse_mesh(mesh) {
        Ok(s) => s,
        Err(Error::DegenerateMesh) => nearest_neighbor_stats(mesh),
        Err(e) => return Err(e),
    };
    grid_init_from_stats(&stats, cfg)
}

pub fn grid_init_from_stats(stats: &EdgeLengthStats, cfg: &GridBuildConfig) -> Result<GridInit> {
    cfg.validate()?;
    let g_max = cfg.g_max as f64;
    let mut axes = Vec::with_capacity(stats.bounds.len());
    let mut reports = Vec::with_capacity(stats.bounds.len());

    for (deltas, &(lo, hi)) in stats.deltas.iter().zip(&stats.bounds) {
        let extent = hi - lo;
        if extent <= 0.0 {
            axes.push(vec![lo]);
            reports.push(AxisReport { spacing: 0.0, percentile: cfg.percentile_k, fallback: false });
            continue;
        }

        let sorted = nonzero_sorted(deltas);
        let mut k = cfg.percentile_k;
        let mut spacing = match nearest_rank(k, &sorted) {
            Ok(s) => Some(s),
            Err(Error::EmptyAfterFiltering) => None,
            Err(e) => return Err(e),
        };
        while let Some(gs) = spacing {
            if extent / gs < g_max {
                break;
            }
            if k >= 100.0 {
                spacing = None;
                break;
            }
            k = (k + cfg.delta).min(100.0);
            spacing = Some(nearest_rank(k, &sorted)?);
        }

        match spacing {
            Some(gs) => {
                let steps = (extent / gs).floor() as usize;
                let mut axis: Vec<f64> = (0..=steps).map(|t| lo + t as f64 * gs).collect();
                let last = *axis.last().unwrap();
                if hi - last > gs / 2.0 {
                    axis.push(hi);
                }
                axes.push(axis);
                reports.push(AxisReport { spacing: gs, percentile: k, fallback: false });
            }
            None => {
                let n = cfg.g_max;
                let gs = extent / (n - 1) as f64;
                let mut axis: Vec<f64> = (0..n).map(|t| lo + t as f64 * gs).collect();
                axis[n - 1] = hi;
                axes.push(axis);
                reports.push(AxisReport { spacing: gs, percentile: k, fallback: true });
            }
        }
    }
    Ok(GridInit { grid: RectGrid::new(axes)?, axes: reports })
}

/// Index of the axis coordinate nearest to `c`; exact halfway ties go to
/// the lower index and points outside the axis clamp to an endpoint.
pub fn nearest_axis_index(axis: &[f64], c: f64) -> usize {
    let j = axis.partition_point(|&a| a < c);
    if j == 0 {
        0
    } else if j == axis.len() {
        axis.len() - 1
    } else if c - axis[j - 1] <= axis[j] - c {
        j - 1
    } else {
        j
    }
}

/// Linear index of the grid node nearest to `p`.
pub fn map_vertex(grid: &RectGrid, p: &[f64]) -> usize {
    grid.axes()
        .iter()
        .zip(p)
        .fold(0, |lin, (axis, &c)| lin * axis.len() + nearest_axis_index(axis, c))
}

/// Reindexes dense assignments after deleting hyperplanes. `deleted[d]`
/// lists the removed coordinate indices of axis `d` on a grid of
/// `old_shape`. Every referenced node keeps its geometric position.
pub fn remap_after_coarsen(
    assignments: &[usize],
    old_shape: &[usize],
    deleted: &[Vec<usize>],
) -> Result<Vec<usize>> {
    if deleted.len() != old_shape.len() {
        return Err(Error::LengthMismatch { expected: old_shape.len(), actual: deleted.len() });
    }
    // old axis index -> new axis index
    let mut maps: Vec<Vec<Option<usize>>> = Vec::with_capacity(old_shape.len());
    let mut new_shape = Vec::with_capacity(old_shape.len());
    for (&len, del) in old_shape.iter().zip(deleted) {
        let mut keep = vec![true; len];
        for &i in del {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i as u64, limit: len as u64 });
            }
            keep[i] = false;
        }
        let mut next = 0;
        let map: Vec<Option<usize>> = keep
            .iter()
            .map(|&k| {
                k.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        new_shape.push(next);
        maps.push(map);
    }
    let old_strides = strides_of(old_shape);
    let new_strides = strides_of(&new_shape);
    let total: usize = old_shape.iter().product();

    assignments
        .iter()
        .map(|&m| {
            if m >= total {
                return Err(Error::InternalInconsistency(format!(
                    "assignment {m} outside grid of {total} nodes"
                )));
            }
            let mut rest = m;
            let mut lin = 0;
            for d in 0..old_shape.len() {
                let i = rest / old_strides[d];
                rest %= old_strides[d];
                let ni = maps[d][i].ok_or_else(|| {
                    Error::InternalInconsistency(format!(
                        "assignment {m} lies on deleted plane {i} of axis {d}"
                    ))
                })?;
                lin += ni * new_strides[d];
            }
            Ok(lin)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coarsened {
    pub grid: RectGrid,
    pub mapping: MappingTable,
    /// Visited nodes over surviving nodes.
    pub visited_fraction: f64,
    /// Deleted plane indices per axis, relative to the input grid.
    pub deleted: Vec<Vec<usize>>,
}

/// Maps every vertex to its nearest node, deletes hyperplanes that no
/// vertex maps into, and switches to seed mode when the surviving grid is
/// still sparsely visited.
pub fn grid_coarsen(mesh: &Mesh, grid: &RectGrid, cfg: &GridBuildConfig) -> Result<Coarsened> {
    cfg.validate()?;
    if mesh.dim() != grid.dim() {
        return Err(Error::LengthMismatch { expected: grid.dim(), actual: mesh.dim() });
    }
    let shape = grid.shape();
    let strides = grid.strides();
    let assignments: Vec<usize> = mesh.vertices().map(|p| map_vertex(grid, p)).collect();

    let mut visited = vec![false; grid.node_count()];
    for &m in &assignments {
        visited[m] = true;
    }

    // A plane (fixed index on axis d) is kept iff some visited node lies in it.
    let mut plane_visited: Vec<Vec<bool>> = shape.iter().map(|&n| vec![false; n]).collect();
    for (lin, _) in visited.iter().enumerate().filter(|(_, &v)| v) {
        let mut rest = lin;
        for d in 0..shape.len() {
            plane_visited[d][rest / strides[d]] = true;
            rest %= strides[d];
        }
    }
    let deleted: Vec<Vec<usize>> = plane_visited
        .iter()
        .map(|p| p.iter().enumerate().filter(|(_, &v)| !v).map(|(i, _)| i).collect())
        .collect();

    let axes: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .zip(&plane_visited)
        .map(|(axis, keep)| axis.iter().zip(keep).filter(|(_, &k)| k).map(|(&c, _)| c).collect())
        .collect();
    let coarse = RectGrid::new(axes)?;
    let remapped = remap_after_coarsen(&assignments, &shape, &deleted)?;

    let mut visited_nodes: Vec<usize> = remapped.clone();
    visited_nodes.sort_unstable();
    visited_nodes.dedup();
    let visited_fraction = visited_nodes.len() as f64 / coarse.node_count() as f64;

    let mapping = if visited_fraction < cfg.seed_mode_threshold {
        let positions = remapped
            .iter()
            .map(|m| visited_nodes.binary_search(m).expect("visited node present"))
            .collect();
        MappingTable::seed(positions, visited_nodes)?
    } else {
        MappingTable::dense(remapped)
    };
    Ok(Coarsened { grid: coarse, mapping, visited_fraction, deleted })
}

/// Grid construction followed by coarsening.
pub fn build_grid(mesh: &Mesh, cfg: &GridBuildConfig) -> Result<(GridInit, Coarsened)> {
    let init = grid_init(mesh, cfg)?;
    let coarse = grid_coarsen(mesh, &init.grid, cfg)?;
    Ok((init, coarse))
}
