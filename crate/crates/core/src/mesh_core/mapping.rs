use crate::error::{Error, Result};

use super::RectGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingMode {
    /// Assignments are linear node indices of the full grid.
    Dense,
    /// Assignments index into the sorted list of visited nodes.
    Seed,
}

/// Per-vertex nearest-node assignment, independent of field values and
/// reusable across fields and timesteps on the same mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    assignments: Vec<usize>,
    visited: Option<Vec<usize>>,
}

impl MappingTable {
    pub fn dense(assignments: Vec<usize>) -> Self {
        Self { assignments, visited: None }
    }

    pub fn seed(assignments: Vec<usize>, visited: Vec<usize>) -> Result<Self> {
        if visited.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("visited nodes must be sorted and unique".into()));
        }
        if let Some(&bad) = assignments.iter().find(|&&m| m >= visited.len()) {
            return Err(Error::IndexOutOfRange { index: bad as u64, limit: visited.len() as u64 });
        }
        Ok(Self { assignments, visited: Some(visited) })
    }

    pub fn mode(&self) -> MappingMode {
        if self.visited.is_some() {
            MappingMode::Seed
        } else {
            MappingMode::Dense
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.assignments.len()
    }

    /// Raw assignments `m_i`: grid indices (dense) or seed-list positions.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn visited_nodes(&self) -> Option<&[usize]> {
        self.visited.as_deref()
    }

    /// Grid linear index of the node vertex `i` is assigned to.
    pub fn node_of(&self, i: usize) -> usize {
        let m = self.assignments[i];
        match &self.visited {
            Some(v) => v[m],
            None => m,
        }
    }

    /// Length of the grid component stored for this mapping.
    pub fn component_len(&self, grid: &RectGrid) -> usize {
        match &self.visited {
            Some(v) => v.len(),
            None => grid.node_count(),
        }
    }

    /// Fraction of grid nodes that have at least one vertex.
    pub fn visited_fraction(&self, grid: &RectGrid) -> f64 {
        let total = grid.node_count();
        let visited = match &self.visited {
            Some(v) => v.len(),
            None => {
                let mut seen = vec![false; total];
                self.assignments.iter().filter(|&&m| !std::mem::replace(&mut seen[m], true)).count()
            }
        };
        visited as f64 / total as f64
    }

    /// Checks every assignment against `grid`.
    pub fn validate(&self, grid: &RectGrid) -> Result<()> {
        let n1 = grid.node_count();
        let limit = match &self.visited {
            Some(v) => {
                if let Some(&bad) = v.iter().find(|&&j| j >= n1) {
                    return Err(Error::IndexOutOfRange { index: bad as u64, limit: n1 as u64 });
                }
                v.len()
            }
            None => n1,
        };
        if let Some(&bad) = self.assignments.iter().find(|&&m| m >= limit) {
            return Err(Error::IndexOutOfRange { index: bad as u64, limit: limit as u64 });
        }
        Ok(())
    }
}
