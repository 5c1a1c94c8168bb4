//! Tensor-product grids and the collar discretisation `[0, eps] x boundary`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::manifold::BoundaryGrid;

/// One uniformly spaced grid direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    n: usize,
    start: f64,
    spacing: f64,
    periodic: bool,
}

impl Axis {
    /// `n` nodes `start, start + h, ..., end` including both endpoints.
    pub fn closed(n: usize, start: f64, end: f64) -> Axis {
        assert!(n >= 2);
        Axis { n, start, spacing: (end - start) / (n - 1) as f64, periodic: false }
    }

    /// `n` nodes `0, P/n, ..., (n-1)P/n` with wrap-around.
    pub fn periodic(n: usize, period: f64) -> Axis {
        Axis { n, start: 0.0, spacing: period / n as f64, periodic: true }
    }

    /// `n` cell midpoints of `[start, end]`.
    pub fn cell_centered(n: usize, start: f64, end: f64) -> Axis {
        let h = (end - start) / n as f64;
        Axis { n, start: start + 0.5 * h, spacing: h, periodic: false }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.spacing * self.n as f64)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.start + self.spacing * i as f64
    }
}

/// Row-major product of axes (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    pub axes: Vec<Axis>,
}

impl ProductGrid {
    pub fn new(axes: Vec<Axis>) -> ProductGrid {
        ProductGrid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes.len()];
        for k in (0..self.axes.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].len();
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            idx[k] = flat % self.axes[k].len();
            flat /= self.axes[k].len();
        }
        idx
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(i, a)| a.coord(*i)).collect()
    }
}

/// Collar grid: uniformly spaced `r` nodes on `[0, eps]` times a boundary grid.
/// Node `(i, j)` has flat index `i * boundary.len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarGrid {
    pub epsilon: f64,
    pub r_nodes: Vec<f64>,
    pub boundary: BoundaryGrid,
}

impl CollarGrid {
    pub fn new(epsilon: f64, n_r: usize, boundary: BoundaryGrid) -> Result<CollarGrid> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter("collar depth must be positive"));
        }
        if n_r < 8 {
            return Err(Error::InvalidParameter("collar grids need at least 8 radial nodes"));
        }
        let axis = Axis::closed(n_r, 0.0, epsilon);
        let r_nodes = (0..n_r).map(|i| axis.coord(i)).collect::<Vec<_>>();
        Ok(CollarGrid { epsilon, r_nodes, boundary })
    }

    pub fn len(&self) -> usize {
        self.r_nodes.len() * self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_r: usize, j: usize) -> usize {
        i_r * self.boundary.len() + j
    }

    pub fn r_of(&self, flat: usize) -> f64 {
        self.r_nodes[flat / self.boundary.len()]
    }

    /// Product grid in collar coordinates `(r, s1, ...)`.
    pub fn product(&self) -> ProductGrid {
        let mut axes = vec![Axis::closed(self.r_nodes.len(), 0.0, self.epsilon)];
        axes.extend_from_slice(&self.boundary.axes);
        ProductGrid::new(axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_kinds() {
        let a = Axis::periodic(8, 2.0);
        assert_eq!(a.coord(4), 1.0);
        assert_eq!(a.period(), Some(2.0));
        let c = Axis::closed(5, 0.0, 1.0);
        assert_eq!(c.coord(4), 1.0);
        assert_eq!(c.period(), None);
        let m = Axis::cell_centered(4, 0.0, 1.0);
        assert_eq!(m.coord(0), 0.125);
    }

    #[test]
    fn product_indexing() {
        let g = ProductGrid::new(vec![Axis::closed(3, 0.0, 2.0), Axis::periodic(4, 4.0)]);
        assert_eq!(g.len(), 12);
        assert_eq!(g.strides(), vec![4, 1]);
        assert_eq!(g.multi_index(7), vec![1, 3]);
        assert_eq!(g.coords(7), vec![1.0, 3.0]);
    }
}
