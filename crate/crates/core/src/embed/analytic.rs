//! Closed-form embeddings for structured metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{EuclideanEmbedding, Provenance};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{Frame, SymTensorField};
use crate::grid::ProductGrid;
use crate::linalg::{Matrix, SymMat};
use crate::math;
use crate::quad::adaptive_simpson;

/// Metrics with a known isometric embedding. Grids are `(t, theta)` with
/// `theta` periodic (for the flat torus both axes are periodic).
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticSurface {
    /// `A(t)^2 dt^2 + B(t)^2 dtheta^2`, expressions in the single variable `t`:
    /// `(B cos, B sin, Z)` with `Z' = sqrt(A^2 - B'^2)` (for period `2 pi`).
    Revolution { a: Expr, b: Expr },
    /// `b^2 dt^2 + a^2 dtheta^2`: `(a cos theta, a sin theta, b t)`.
    FlatCylinder { a: f64, b: f64 },
    /// `a^2 dt^2 + b^2 dtheta^2` on a torus, period `2 pi` in both: a circle pair in `R^4`.
    FlatTorus { a: f64, b: f64 },
}

impl AnalyticSurface {
    pub fn name(&self) -> String {
        match self {
            AnalyticSurface::Revolution { a, b } => {
                format!("revolution(A = {}, B = {})", a.display(&["t"]), b.display(&["t"]))
            }
            AnalyticSurface::FlatCylinder { a, b } => format!("flat-cylinder({a}, {b})"),
            AnalyticSurface::FlatTorus { a, b } => format!("flat-torus({a}, {b})"),
        }
    }

    fn check_grid(&self, grid: &ProductGrid) -> Result<()> {
        if grid.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: grid.dim() });
        }
        let ok = match self {
            AnalyticSurface::FlatTorus { .. } => grid.axes.iter().all(|a| a.is_periodic()),
            _ => !grid.axes[0].is_periodic() && grid.axes[1].is_periodic(),
        };
        if !ok {
            return Err(Error::InvalidParameter("grid axes do not match the analytic surface"));
        }
        Ok(())
    }

    /// The metric the surface realises, sampled on `grid`.
    pub fn metric(&self, grid: &ProductGrid) -> Result<SymTensorField> {
        self.check_grid(grid)?;
        let values = (0..grid.len())
            .map(|f| {
                let t = grid.coords(f)[0];
                match self {
                    AnalyticSurface::Revolution { a, b } => {
                        let (av, bv) = (a.eval(&[t]), b.eval(&[t]));
                        SymMat::diag(&[av * av, bv * bv])
                    }
                    AnalyticSurface::FlatCylinder { a, b } => SymMat::diag(&[b * b, a * a]),
                    AnalyticSurface::FlatTorus { a, b } => SymMat::diag(&[a * a, b * b]),
                }
            })
            .collect();
        Ok(SymTensorField::new(Frame::Coordinate, values))
    }
}

/// Points and exact Jacobians of the closed-form map on `grid`.
pub fn analytic_embedding(surface: &AnalyticSurface, grid: &ProductGrid) -> Result<EuclideanEmbedding> {
    surface.check_grid(grid)?;
    let len = grid.len();
    let (n, mut points, mut jacobians) = match surface {
        AnalyticSurface::FlatTorus { .. } => (4, Vec::with_capacity(4 * len), Vec::with_capacity(len)),
        _ => (3, Vec::with_capacity(3 * len), Vec::with_capacity(len)),
    };
    let period = grid.axes[1].period().unwrap_or(math::TAU);
    let w = math::TAU / period;
    match surface {
        AnalyticSurface::Revolution { a, b } => {
            let db = b.differentiate(0);
            let t_axis = grid.axes[0];
            // Z' on every t node, checking representability
            let zp = |t: f64| {
                let (av, bp) = (a.eval(&[t]), db.eval(&[t]) / w);
                av * av - bp * bp
            };
            let mut z = vec![0.0; t_axis.len()];
            for i in 0..t_axis.len() {
                let t = t_axis.coord(i);
                let deficit = zp(t);
                if deficit < 0.0 {
                    return Err(Error::NotRepresentable { r: t, deficit });
                }
                if i > 0 {
                    let f = |s: f64| math::sqrt(zp(s).max(0.0));
                    z[i] = z[i - 1] + adaptive_simpson(&f, t_axis.coord(i - 1), t, 1e-13)?;
                }
            }
            for flat in 0..len {
                let idx = grid.multi_index(flat);
                let (t, th) = (t_axis.coord(idx[0]), grid.axes[1].coord(idx[1]));
                let (bv, bp) = (b.eval(&[t]), db.eval(&[t]));
                let (s, c) = (math::sin(w * th), math::cos(w * th));
                points.extend_from_slice(&[bv / w * c, bv / w * s, z[idx[0]]]);
                let zprime = math::sqrt(zp(t).max(0.0));
                jacobians.push(Matrix::from_rows(&[&[bp / w * c, -bv * s], &[bp / w * s, bv * c], &[zprime, 0.0]]));
            }
        }
        AnalyticSurface::FlatCylinder { a, b } => {
            let ra = a / w;
            for flat in 0..len {
                let c = grid.coords(flat);
                let (s, co) = (math::sin(w * c[1]), math::cos(w * c[1]));
                points.extend_from_slice(&[ra * co, ra * s, b * c[0]]);
                jacobians.push(Matrix::from_rows(&[&[0.0, -a * s], &[0.0, a * co], &[*b, 0.0]]));
            }
        }
        AnalyticSurface::FlatTorus { a, b } => {
            let w0 = math::TAU / grid.axes[0].period().unwrap_or(math::TAU);
            let (ra, rb) = (a / w0, b / w);
            for flat in 0..len {
                let c = grid.coords(flat);
                let (s0, c0) = (math::sin(w0 * c[0]), math::cos(w0 * c[0]));
                let (s1, c1) = (math::sin(w * c[1]), math::cos(w * c[1]));
                points.extend_from_slice(&[ra * c0, ra * s0, rb * c1, rb * s1]);
                jacobians.push(Matrix::from_rows(&[&[-a * s0, 0.0], &[a * c0, 0.0], &[0.0, -b * s1], &[0.0, b * c1]]));
            }
        }
    }
    Ok(EuclideanEmbedding { grid: grid.clone(), n, points, jacobians, provenance: Provenance::Analytic(surface.name()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::linalg::pullback;

    fn grid() -> ProductGrid {
        ProductGrid::new(vec![Axis::closed(9, 0.0, 1.0), Axis::periodic(16, math::TAU)])
    }

    #[test]
    fn flat_cylinder_pullback_is_exact() {
        let g = grid();
        let s = AnalyticSurface::FlatCylinder { a: 2.0, b: 0.5 };
        let e = analytic_embedding(&s, &g).unwrap();
        let metric = s.metric(&g).unwrap();
        for (j, gm) in e.jacobians.iter().zip(&metric.values) {
            let pb = pullback(&Matrix::identity(3), j).unwrap();
            assert!(pb.sub(gm).frobenius() < 1e-14);
        }
    }

    #[test]
    fn flat_torus_uses_unit_circles() {
        let g = ProductGrid::new(vec![Axis::periodic(8, math::TAU), Axis::periodic(8, math::TAU)]);
        let e = analytic_embedding(&AnalyticSurface::FlatTorus { a: 1.0, b: 1.0 }, &g).unwrap();
        assert_eq!(e.n, 4);
        for f in 0..g.len() {
            let p = e.point(f);
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-14);
            assert!((e.jacobians[f].gram().sub(&SymMat::identity(2))).frobenius() < 1e-14);
        }
    }

    #[test]
    fn revolution_checks_representability() {
        let parse = |s: &str| Expr::parse(s, &["t"]).unwrap();
        let ok = AnalyticSurface::Revolution { a: parse("1"), b: parse("1 + 0.5*t") };
        let e = analytic_embedding(&ok, &grid()).unwrap();
        let metric = ok.metric(&grid()).unwrap();
        for (j, gm) in e.jacobians.iter().zip(&metric.values) {
            assert!(j.gram().sub(gm).frobenius() < 1e-13);
        }
        let bad = AnalyticSurface::Revolution { a: parse("1"), b: parse("1 + 2*t") };
        assert!(matches!(analytic_embedding(&bad, &grid()), Err(Error::NotRepresentable { .. })));
    }
}
