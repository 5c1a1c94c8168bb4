//! Fourth-order difference stencils on product grids.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Axis, ProductGrid};
use crate::linalg::Matrix;

const CENTRAL: [(isize, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
const FORWARD0: [(isize, f64); 5] = [(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)];
const FORWARD1: [(isize, f64); 5] = [(-1, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)];

/// Per-axis, per-index list of `(neighbour index, weight)` for `d/ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencils {
    pub axes: Vec<Vec<Vec<(usize, f64)>>>,
    pub strides: Vec<usize>,
}

fn axis_stencil(axis: &Axis) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = axis.len();
    if n < 5 {
        return Err(Error::InvalidParameter("difference stencils need at least 5 nodes per axis"));
    }
    let w = 1.0 / (12.0 * axis.spacing());
    let at = |i: usize, taps: &[(isize, f64)], sign: f64| -> Vec<(usize, f64)> {
        taps.iter()
            .map(|&(o, c)| {
                let j = if axis.is_periodic() { (i as isize + o).rem_euclid(n as isize) } else { i as isize + o };
                (j as usize, sign * c * w)
            })
            .collect()
    };
    let mirror = |taps: &[(isize, f64)]| -> Vec<(isize, f64)> { taps.iter().map(|&(o, c)| (-o, c)).collect() };
    Ok((0..n)
        .map(|i| {
            if axis.is_periodic() || (i >= 2 && i + 2 < n) {
                at(i, &CENTRAL, 1.0)
            } else if i == 0 {
                at(i, &FORWARD0, 1.0)
            } else if i == 1 {
                at(i, &FORWARD1, 1.0)
            } else if i == n - 1 {
                at(i, &mirror(&FORWARD0), -1.0)
            } else {
                at(i, &mirror(&FORWARD1), -1.0)
            }
        })
        .collect())
}

impl Stencils {
    pub fn new(grid: &ProductGrid) -> Result<Stencils> {
        let axes = grid.axes.iter().map(axis_stencil).collect::<Result<Vec<_>>>()?;
        Ok(Stencils { axes, strides: grid.strides() })
    }

    /// Calls `f(neighbour_flat, weight)` for the `d/ds_k` stencil at `flat`.
    #[inline]
    pub fn for_each<F: FnMut(usize, f64)>(&self, flat: usize, k: usize, mut f: F) {
        let stride = self.strides[k];
        let n = self.axes[k].len();
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        for &(j, w) in &self.axes[k][i] {
            f(base + j * stride, w);
        }
    }

    /// `N x m` Jacobians of point data laid out node-major with `n_amb` entries each.
    pub fn jacobians(&self, points: &[f64], n_amb: usize) -> Vec<Matrix> {
        let m = self.axes.len();
        let len = points.len() / n_amb;
        (0..len)
            .map(|flat| {
                let mut j = Matrix::zeros(n_amb, m);
                for k in 0..m {
                    self.for_each(flat, k, |nb, w| {
                        for a in 0..n_amb {
                            j.data[a * m + k] += w * points[nb * n_amb + a];
                        }
                    });
                }
                j
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_on_quartics_and_trigonometric_on_periodic_axes() {
        let grid = ProductGrid::new(vec![Axis::closed(9, 0.0, 1.0), Axis::periodic(32, crate::math::TAU)]);
        let st = Stencils::new(&grid).unwrap();
        let pts: Vec<f64> = (0..grid.len())
            .flat_map(|f| {
                let c = grid.coords(f);
                vec![c[0].powi(4), libm::sin(c[1])]
            })
            .collect();
        let jac = st.jacobians(&pts, 2);
        for (f, j) in jac.iter().enumerate() {
            let c = grid.coords(f);
            assert!((j.get(0, 0) - 4.0 * c[0].powi(3)).abs() < 1e-11);
            assert!(j.get(0, 1).abs() < 1e-11 && j.get(1, 0).abs() < 1e-11);
            assert!((j.get(1, 1) - libm::cos(c[1])).abs() < 1e-4);
        }
    }
}
