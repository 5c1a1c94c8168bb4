//! Model manifolds with boundary and their boundary charts.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::linalg::MAX_DIM;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Closed unit ball in `R^m`, coordinates `y1..ym`.
    Disk,
    /// `[0, r_max] x T^(m-1)`, coordinates `r, y1..y(m-1)`.
    CollarTorus,
}

/// Which ends of a collar-torus are boundary at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryEnds {
    /// `r = 0` only.
    Inner,
    /// `r = 0` and `r = r_max`.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifold {
    kind: ModelKind,
    dim: usize,
    r_max: f64,
    periods: Vec<f64>,
    ends: BoundaryEnds,
}

const DISK_NAMES: [&str; 3] = ["y1", "y2", "y3"];
const TORUS_NAMES: [&str; 3] = ["r", "y1", "y2"];

impl ModelManifold {
    pub fn disk(dim: usize) -> Result<ModelManifold> {
        check_dim(dim)?;
        Ok(ModelManifold { kind: ModelKind::Disk, dim, r_max: 1.0, periods: Vec::new(), ends: BoundaryEnds::Inner })
    }

    pub fn collar_torus(dim: usize, r_max: f64, periods: &[f64], ends: BoundaryEnds) -> Result<ModelManifold> {
        check_dim(dim)?;
        if !(r_max > 0.0) {
            return Err(Error::InvalidManifold("r_max must be positive"));
        }
        if periods.len() != dim - 1 {
            return Err(Error::InvalidManifold("need one period per angular coordinate"));
        }
        if periods.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidManifold("periods must be positive"));
        }
        Ok(ModelManifold { kind: ModelKind::CollarTorus, dim, r_max, periods: periods.to_vec(), ends })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn ends(&self) -> BoundaryEnds {
        self.ends
    }

    pub fn num_ends(&self) -> usize {
        match (self.kind, self.ends) {
            (ModelKind::CollarTorus, BoundaryEnds::Both) => 2,
            _ => 1,
        }
    }

    /// Chart coordinate names, in order.
    pub fn coordinate_names(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::Disk => &DISK_NAMES[..self.dim],
            ModelKind::CollarTorus => &TORUS_NAMES[..self.dim],
        }
    }

    /// Whether `p` lies in the closed chart domain, up to `tol`.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        match self.kind {
            ModelKind::Disk => p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + tol,
            ModelKind::CollarTorus => p[0] >= -tol && p[0] <= self.r_max + tol,
        }
    }

    /// Parameter axes of the boundary chart, with `n` nodes per axis.
    pub fn boundary_axes(&self, n: usize) -> Vec<Axis> {
        match self.kind {
            ModelKind::Disk if self.dim == 2 => vec![Axis::periodic(n, math::TAU)],
            ModelKind::Disk => vec![Axis::cell_centered(n, 0.0, math::PI), Axis::periodic(n, math::TAU)],
            ModelKind::CollarTorus => self.periods.iter().map(|p| Axis::periodic(n, *p)).collect(),
        }
    }

    /// Embeds boundary parameters into the chart, with tangents and the inward
    /// coordinate direction.
    pub fn boundary_point(&self, end: usize, params: &[f64]) -> BoundaryPoint {
        let m = self.dim;
        match self.kind {
            ModelKind::Disk if m == 2 => {
                let (s, c) = (math::sin(params[0]), math::cos(params[0]));
                BoundaryPoint { point: vec![c, s], tangents: vec![vec![-s, c]], inward: vec![-c, -s] }
            }
            ModelKind::Disk => {
                let (sa, ca) = (math::sin(params[0]), math::cos(params[0]));
                let (sb, cb) = (math::sin(params[1]), math::cos(params[1]));
                BoundaryPoint {
                    point: vec![sa * cb, sa * sb, ca],
                    tangents: vec![vec![ca * cb, ca * sb, -sa], vec![-sa * sb, sa * cb, 0.0]],
                    inward: vec![-sa * cb, -sa * sb, -ca],
                }
            }
            ModelKind::CollarTorus => {
                let mut point = vec![0.0; m];
                point[0] = if end == 0 { 0.0 } else { self.r_max };
                point[1..].copy_from_slice(&params[..m - 1]);
                let tangents = (1..m)
                    .map(|k| {
                        let mut t = vec![0.0; m];
                        t[k] = 1.0;
                        t
                    })
                    .collect();
                let mut inward = vec![0.0; m];
                inward[0] = if end == 0 { 1.0 } else { -1.0 };
                BoundaryPoint { point, tangents, inward }
            }
        }
    }

    pub fn boundary_grid(&self, end: usize, n: usize) -> Result<BoundaryGrid> {
        if end >= self.num_ends() {
            return Err(Error::InvalidParameter("boundary end out of range"));
        }
        if n < 8 {
            return Err(Error::InvalidParameter("boundary grids need at least 8 nodes per direction"));
        }
        let axes = self.boundary_axes(n);
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut nodes = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut params = vec![0.0; axes.len()];
            for (k, axis) in axes.iter().enumerate().rev() {
                params[k] = axis.coord(rem % axis.len());
                rem /= axis.len();
            }
            let bp = self.boundary_point(end, &params);
            nodes.push(BoundaryNode { params, point: bp.point, tangents: bp.tangents, inward: bp.inward });
        }
        Ok(BoundaryGrid { end, axes, nodes })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidManifold("dimension must be 2 or 3"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub inward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode {
    pub params: Vec<f64>,
    /// Chart coordinates of the node.
    pub point: Vec<f64>,
    /// Derivatives of the boundary embedding with respect to each parameter.
    pub tangents: Vec<Vec<f64>>,
    pub inward: Vec<f64>,
}

/// Tensor-product grid on one boundary component; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub end: usize,
    pub axes: Vec<Axis>,
    pub nodes: Vec<BoundaryNode>,
}

impl BoundaryGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelManifold::disk(1).is_err());
        assert!(ModelManifold::disk(4).is_err());
        assert!(ModelManifold::collar_torus(2, 0.0, &[1.0], BoundaryEnds::Inner).is_err());
        assert!(ModelManifold::collar_torus(2, 1.0, &[-1.0], BoundaryEnds::Inner).is_err());
        assert!(ModelManifold::collar_torus(3, 1.0, &[1.0], BoundaryEnds::Inner).is_err());
        assert!(ModelManifold::disk(2).unwrap().boundary_grid(0, 4).is_err());
    }

    #[test]
    fn disk_boundary_nodes_lie_on_the_sphere() {
        for m in [2, 3] {
            let disk = ModelManifold::disk(m).unwrap();
            let grid = disk.boundary_grid(0, 8).unwrap();
            assert_eq!(grid.len(), if m == 2 { 8 } else { 64 });
            for node in &grid.nodes {
                let norm: f64 = node.point.iter().map(|v| v * v).sum();
                assert!((norm - 1.0).abs() < 1e-14);
                for t in &node.tangents {
                    let dot: f64 = t.iter().zip(&node.point).map(|(a, b)| a * b).sum();
                    assert!(dot.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn torus_far_end() {
        let t = ModelManifold::collar_torus(2, 2.0, &[math::TAU], BoundaryEnds::Both).unwrap();
        assert_eq!(t.num_ends(), 2);
        let g = t.boundary_grid(1, 8).unwrap();
        assert!(g.nodes.iter().all(|n| n.point[0] == 2.0 && n.inward[0] == -1.0));
    }
}
