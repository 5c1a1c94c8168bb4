//! Closed-form compactified metrics `gbar = r^2 g` and smooth scalar functions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::field::{Frame, FrameTensor};
use crate::linalg::{SymMat, MAX_DIM};
use crate::manifold::{BoundaryGrid, ModelManifold};
use crate::math;

/// Anything with a value and a gradient in chart coordinates.
pub trait ScalarField {
    fn value(&self, p: &[f64]) -> f64;
    fn gradient(&self, p: &[f64]) -> [f64; MAX_DIM];
}

/// An expression together with its symbolic gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothFunction {
    expr: Expr,
    grad: Vec<Expr>,
    hess: Vec<Expr>,
    dim: usize,
}

impl SmoothFunction {
    pub fn new(expr: Expr, dim: usize) -> SmoothFunction {
        let grad = expr::gradient(&expr, dim);
        let mut hess = Vec::with_capacity(dim * dim);
        for gi in &grad {
            for k in 0..dim {
                hess.push(gi.differentiate(k));
            }
        }
        SmoothFunction { expr, grad, hess, dim }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn hessian(&self, p: &[f64]) -> SymMat {
        let mut h = SymMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = 0.5 * (self.hess[i * self.dim + j].eval(p) + self.hess[j * self.dim + i].eval(p));
                h.set(i, j, v);
            }
        }
        h
    }
}

impl ScalarField for SmoothFunction {
    fn value(&self, p: &[f64]) -> f64 {
        self.expr.eval(p)
    }

    fn gradient(&self, p: &[f64]) -> [f64; MAX_DIM] {
        let mut g = [0.0; MAX_DIM];
        for (k, d) in self.grad.iter().enumerate() {
            g[k] = d.eval(p);
        }
        g
    }
}

/// Compactified metric `gbar` on a model manifold together with the reference
/// boundary defining function `r`; the conformally compact metric is `gbar / r^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    manifold: ModelManifold,
    components: Vec<Expr>,
    /// `d_k gbar_ij` stored at `[k][i * m + j]`.
    partials: Vec<Vec<Expr>>,
    bdf: SmoothFunction,
}

impl MetricSpec {
    pub fn new(manifold: ModelManifold, components: Vec<Vec<Expr>>, reference_bdf: Expr) -> Result<MetricSpec> {
        let m = manifold.dim();
        if components.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: components.len() });
        }
        for row in &components {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: row.len() });
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if components[i][j] != components[j][i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let flat: Vec<Expr> = components.into_iter().flatten().collect();
        for e in flat.iter().chain(core::iter::once(&reference_bdf)) {
            if let Some(v) = e.max_var() {
                if v >= m {
                    return Err(Error::DimensionMismatch { expected: m, found: v + 1 });
                }
            }
        }
        let partials = (0..m).map(|k| flat.iter().map(|e| e.differentiate(k)).collect()).collect();
        Ok(MetricSpec { manifold, components: flat, partials, bdf: SmoothFunction::new(reference_bdf, m) })
    }

    /// Parses component sources (row-major, full square) against the manifold's
    /// coordinate names.
    pub fn from_sources(manifold: ModelManifold, components: &[&[&str]], reference_bdf: &str) -> Result<MetricSpec> {
        let names = manifold.coordinate_names();
        let comps = components
            .iter()
            .map(|row| row.iter().map(|s| Expr::parse(s, names)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let bdf = Expr::parse(reference_bdf, names)?;
        MetricSpec::new(manifold, comps, bdf)
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    pub fn reference_bdf(&self) -> &SmoothFunction {
        &self.bdf
    }

    /// `lambda^2 g`: every component of `gbar` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> MetricSpec {
        let m = self.dim();
        let comps = (0..m)
            .map(|i| (0..m).map(|j| expr::mul(Expr::Const(factor), self.component(i, j).clone())).collect())
            .collect();
        MetricSpec::new(self.manifold.clone(), comps, self.bdf.expr().clone()).expect("scaling preserves validity")
    }

    /// Same `g`, different reference bdf `r~ = f`: `gbar~ = (f / r)^2 gbar` is only
    /// available in closed form when the caller supplies the new components.
    pub fn with_reference_bdf(&self, components: Vec<Vec<Expr>>, bdf: Expr) -> Result<MetricSpec> {
        MetricSpec::new(self.manifold.clone(), components, bdf)
    }

    /// `gbar(p)` in coordinates.
    pub fn eval_bar(&self, p: &[f64]) -> Result<SymMat> {
        let m = self.dim();
        let mut g = SymMat::zeros(m);
        for i in 0..m {
            for j in i..m {
                let v = self.components[i * m + j].eval(p);
                if !v.is_finite() {
                    return Err(Error::NonFinite { what: "metric component" });
                }
                g.set(i, j, v);
            }
        }
        Ok(g)
    }

    /// Components of `g` in the 0-frame `{r d_r, r d_y}`, which coincide with the
    /// coordinate components of `gbar`; finite up to `r = 0`.
    pub fn eval_metric(&self, p: &[f64]) -> Result<FrameTensor> {
        Ok(FrameTensor { frame: Frame::ZeroFrame, value: self.eval_bar(p)? })
    }

    /// Coordinate components of `g = gbar / r^2`; interior only.
    pub fn coordinate_metric(&self, p: &[f64]) -> Result<FrameTensor> {
        let r = self.bdf.value(p);
        if !(r > 0.0) {
            return Err(Error::TooCloseToBoundary { r, r_min: 0.0 });
        }
        Ok(FrameTensor { frame: Frame::Coordinate, value: self.eval_bar(p)?.scale(1.0 / (r * r)) })
    }

    /// `d_k gbar` for every coordinate `k`.
    pub fn bar_partials(&self, p: &[f64]) -> [SymMat; MAX_DIM] {
        let m = self.dim();
        let mut out = [SymMat::zeros(m); MAX_DIM];
        for (k, slot) in out.iter_mut().enumerate().take(m) {
            for i in 0..m {
                for j in i..m {
                    slot.set(i, j, self.partials[k][i * m + j].eval(p));
                }
            }
        }
        out
    }

    pub fn inverse_bar(&self, p: &[f64]) -> Result<SymMat> {
        self.eval_bar(p)?.inverse().ok_or_else(|| Error::SingularMetric { node: p.to_vec() })
    }

    /// `gbar^{mu nu} d_mu f d_nu f`.
    pub fn zero_norm_of_differential(&self, f: &dyn ScalarField, p: &[f64]) -> Result<f64> {
        let inv = self.inverse_bar(p)?;
        let df = f.gradient(p);
        Ok(inv.bilinear(&df, &df))
    }

    /// `K^2 = |dr|^2_gbar` for the reference bdf.
    pub fn k2(&self, p: &[f64]) -> Result<f64> {
        self.zero_norm_of_differential(&self.bdf, p)
    }

    /// Checks positive-definiteness at `nodes` and that the reference bdf vanishes
    /// on `boundary` with non-zero differential.
    pub fn validate(&self, nodes: &[Vec<f64>], boundary: &BoundaryGrid) -> Result<()> {
        for p in nodes.iter().chain(boundary.nodes.iter().map(|n| &n.point)) {
            let lam = self.eval_bar(p)?.min_eigenvalue();
            if !(lam > 0.0) {
                return Err(Error::NotPositiveDefinite { node: p.clone(), min_eigenvalue: lam });
            }
        }
        for node in &boundary.nodes {
            check_bdf_at(&self.bdf, &node.point)?;
        }
        Ok(())
    }
}

/// `f(p) = 0` and `df(p) != 0` at a boundary point.
pub fn check_bdf_at(f: &dyn ScalarField, p: &[f64]) -> Result<()> {
    let value = f.value(p);
    let g = f.gradient(p);
    let norm = math::sqrt(g.iter().map(|v| v * v).sum());
    if value.abs() > 1e-12 || !(norm > 1e-10) {
        return Err(Error::NotABdf { node: p.to_vec(), value, gradient_norm: norm });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn hyperbolic_disk_is_constant_multiple_of_euclidean() {
        let spec = builtins::hyperbolic_disk(2).unwrap();
        let g = spec.eval_metric(&[0.3, -0.5]).unwrap();
        assert_eq!(g.frame, Frame::ZeroFrame);
        assert_eq!(g.value, SymMat::diag(&[4.0, 4.0]));
    }

    #[test]
    fn diagonal_spec_is_read_back() {
        let spec = builtins::normal_form_const_k(0.5).unwrap();
        let p = [0.3, 1.1];
        let g = spec.eval_metric(&p).unwrap().value;
        assert!((g.get(0, 0) - 4.0).abs() < 1e-15);
        assert!((g.get(1, 1) - 1.3 * 1.3).abs() < 1e-15);
        assert_eq!(g.get(0, 1), 0.0);
    }

    #[test]
    fn finite_at_the_boundary() {
        for spec in builtins::all(2) {
            let grid = spec.manifold().boundary_grid(0, 8).unwrap();
            for node in &grid.nodes {
                let g = spec.eval_metric(&node.point).unwrap().value;
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(g.get(i, j).is_finite());
                    }
                }
            }
        }
    }

    #[test]
    fn norm_of_differential_examples() {
        let disk = builtins::hyperbolic_disk(2).unwrap();
        // |d rho|^2 = |y|^2 for gbar = 4 delta
        let v = disk.k2(&[0.3, 0.4]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);

        let flat = MetricSpec::from_sources(ModelManifold::disk(2).unwrap(), &[&["1", "0"], &["0", "1"]], "1 - y1^2 - y2^2").unwrap();
        let y1 = SmoothFunction::new(Expr::Var(0), 2);
        assert_eq!(flat.zero_norm_of_differential(&y1, &[0.1, 0.7]).unwrap(), 1.0);

        let nf = builtins::normal_form_const_k(0.7).unwrap();
        assert!((nf.k2(&[0.2, 3.0]).unwrap() - 0.49).abs() < 1e-14);
    }

    #[test]
    fn frame_consistency() {
        for spec in builtins::all(2) {
            let names = spec.manifold().coordinate_names().len();
            assert_eq!(names, 2);
            let p = match spec.manifold().kind() {
                crate::manifold::ModelKind::Disk => [0.2, -0.6],
                crate::manifold::ModelKind::CollarTorus => [0.3, 0.9],
            };
            let r = spec.reference_bdf().value(&p);
            let coord = spec.coordinate_metric(&p).unwrap().value.scale(r * r);
            let zero = spec.eval_metric(&p).unwrap().value;
            for i in 0..2 {
                for j in 0..2 {
                    assert!((coord.get(i, j) - zero.get(i, j)).abs() <= 1e-15 * zero.frobenius());
                }
            }
        }
    }

    #[test]
    fn rejects_asymmetric_components() {
        let disk = ModelManifold::disk(2).unwrap();
        let r = MetricSpec::from_sources(disk, &[&["1", "y1"], &["0", "1"]], "1 - y1^2 - y2^2");
        assert_eq!(r, Err(Error::NotSymmetric { row: 0, col: 1 }));
    }

    #[test]
    fn validation_catches_non_bdf() {
        let disk = ModelManifold::disk(2).unwrap();
        let spec = MetricSpec::from_sources(disk.clone(), &[&["1", "0"], &["0", "1"]], "2 - y1^2 - y2^2").unwrap();
        let grid = disk.boundary_grid(0, 8).unwrap();
        assert!(matches!(spec.validate(&[], &grid), Err(Error::NotABdf { .. })));
    }
}
