use crate::error::{Error, Result};

/// Axis-aligned grid given by one strictly increasing coordinate array per
/// axis. Nodes are linearized row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RectGrid {
    axes: Vec<Vec<f64>>,
}

impl RectGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!("{} axes", axes.len())));
        }
        for (d, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::InvalidGrid(format!("axis {d} is empty")));
            }
            if axis.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {d} has a non-finite coordinate")));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(format!("axis {d} is not strictly increasing")));
            }
        }
        let mut total: usize = 1;
        for axis in &axes {
            total = total
                .checked_mul(axis.len())
                .ok_or_else(|| Error::InvalidGrid("node count overflows".into()))?;
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    /// Linear step per axis.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape())
    }

    pub fn linear_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), actual: idx.len() });
        }
        let mut lin = 0usize;
        for (axis, &i) in self.axes.iter().zip(idx) {
            if i >= axis.len() {
                return Err(Error::IndexOutOfRange { index: i as u64, limit: axis.len() as u64 });
            }
            lin = lin * axis.len() + i;
        }
        Ok(lin)
    }

    pub fn multi_index(&self, lin: usize) -> Result<Vec<usize>> {
        let n = self.node_count();
        if lin >= n {
            return Err(Error::IndexOutOfRange { index: lin as u64, limit: n as u64 });
        }
        let mut idx = vec![0; self.dim()];
        let mut rest = lin;
        for d in (0..self.dim()).rev() {
            let len = self.axes[d].len();
            idx[d] = rest % len;
            rest /= len;
        }
        Ok(idx)
    }

    pub fn node_coords(&self, lin: usize) -> Result<Vec<f64>> {
        let idx = self.multi_index(lin)?;
        Ok(idx.iter().zip(&self.axes).map(|(&i, a)| a[i]).collect())
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}
