//! The map `u = (x, v)` into the half-space model and its verification.
//!
//! Every isometry comparison is multiplied through by `X^2 = x^2`, so
//! `u^* h_{-1} = (dx^2 + dv^2) / x^2 = g` is checked as `dx^2 + dv^2 = x^2 g`,
//! which stays finite at `r = 0`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bdf::BdfProfile;
use crate::embed::{embedding_diagnostics, EmbeddingDiagnostics, EuclideanEmbedding, Provenance};
use crate::error::{Error, Result};
use crate::field::SymTensorField;
use crate::grid::{Axis, CollarGrid, ProductGrid};
use crate::linalg::{Matrix, SymMat};

/// `h_{-lambda^2} = lambda^{-2} (dX^2 + dY^2) / X^2` on `{X >= 0} x R^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpaceModel {
    /// `N`; the model has dimension `N + 1`.
    pub n: usize,
    pub lambda: f64,
}

impl HalfSpaceModel {
    pub fn new(n: usize, lambda: f64) -> Result<HalfSpaceModel> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite and non-zero"));
        }
        Ok(HalfSpaceModel { n, lambda })
    }

    pub fn curvature(&self) -> f64 {
        -self.lambda * self.lambda
    }

    /// `X^2 h`: the constant matrix `lambda^{-2} I`.
    pub fn compactified_metric(&self) -> Matrix {
        let s = 1.0 / (self.lambda * self.lambda);
        Matrix::diag(&vec![s; self.n + 1])
    }

    /// `h` at a point with `X > 0`.
    pub fn metric_at(&self, point: &[f64]) -> Result<Matrix> {
        let x = point[0];
        if !(x > 0.0) {
            return Err(Error::TooCloseToBoundary { r: x, r_min: 0.0 });
        }
        let s = 1.0 / (self.lambda * self.lambda * x * x);
        Ok(Matrix::diag(&vec![s; self.n + 1]))
    }
}

/// `u = (x, v)` sampled on a collar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PEmbedding {
    pub model: HalfSpaceModel,
    pub grid: ProductGrid,
    /// `r` of every node (first grid coordinate).
    pub r: Vec<f64>,
    /// `X` of every image point; the same numbers as the bdf profile.
    pub x: Vec<f64>,
    /// `dx/dr` of every node; `dx` has no other component in collar coordinates.
    pub dx: Vec<f64>,
    pub v: EuclideanEmbedding,
    /// `(N + 1) x m`: the `dx` row on top of `J_v`.
    pub jacobians: Vec<Matrix>,
}

impl PEmbedding {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `(X, Y_1, ..., Y_N)` of node `flat`.
    pub fn image(&self, flat: usize) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.v.n + 1);
        p.push(self.x[flat]);
        p.extend_from_slice(self.v.point(flat));
        p
    }

    /// `M = dx^2 + dv^2 = J^T J`, the pullback of `X^2 h_{-1}`.
    pub fn compactified_pullback(&self, flat: usize) -> SymMat {
        self.jacobians[flat].gram()
    }
}

fn assemble(model: HalfSpaceModel, r: Vec<f64>, x: Vec<f64>, dx: Vec<f64>, v: EuclideanEmbedding) -> PEmbedding {
    let m = v.grid.dim();
    let n = v.n;
    let jacobians = v
        .jacobians
        .iter()
        .zip(&dx)
        .map(|(jv, &d)| {
            let mut j = Matrix::zeros(n + 1, m);
            j.set(0, 0, d);
            for a in 0..n {
                for k in 0..m {
                    j.set(a + 1, k, jv.get(a, k));
                }
            }
            j
        })
        .collect();
    PEmbedding { model, grid: v.grid.clone(), r, x, dx, v, jacobians }
}

/// Stacks the bdf profile on top of `v`. `v` must live on `collar.product()`.
pub fn compose(profile: &BdfProfile, collar: &CollarGrid, v: EuclideanEmbedding, lambda: f64) -> Result<PEmbedding> {
    let grid = collar.product();
    if v.grid != grid {
        return Err(Error::GridMismatch { expected: grid.len(), found: v.grid.len() });
    }
    let model = HalfSpaceModel::new(v.n, lambda)?;
    let r: Vec<f64> = (0..collar.len()).map(|f| collar.r_of(f)).collect();
    let x = r.iter().map(|&ri| profile.x(ri)).collect();
    let dx = r.iter().map(|&ri| profile.dx(ri)).collect();
    Ok(assemble(model, r, x, dx, v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryCheck {
    /// `|M - x^2 g|_F / |x^2 g|_F` per node.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Compares `dx^2 + dv^2` with `x^2 g` (the latter in collar coordinates).
pub fn pullback_halfspace(u: &PEmbedding, x2g: &[SymMat]) -> Result<IsometryCheck> {
    if x2g.len() != u.len() {
        return Err(Error::GridMismatch { expected: u.len(), found: x2g.len() });
    }
    let residuals: Vec<f64> =
        (0..u.len()).map(|f| u.compactified_pullback(f).sub(&x2g[f]).frobenius() / x2g[f].frobenius()).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(IsometryCheck { residuals, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    /// Smallest admissible `|dx|` at `r = 0`.
    pub transversality: f64,
    pub immersion: f64,
    pub injectivity: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances { transversality: 1e-10, immersion: 1e-3, injectivity: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PEmbeddingReport {
    /// `X = 0` exactly at `r = 0` nodes and `X > 0` elsewhere.
    pub simple_b_map: bool,
    /// `dx != 0` at every `r = 0` node.
    pub transversal: bool,
    pub min_boundary_dx: f64,
    pub min_singular_value: f64,
    pub immersion: bool,
    pub injectivity_ratio: f64,
    pub injective: bool,
    pub embedding: EmbeddingDiagnostics,
}

impl PEmbeddingReport {
    pub fn passed(&self) -> bool {
        self.simple_b_map && self.transversal && self.immersion && self.injective
    }
}

/// Checks the b-map, transversality, immersion and injectivity conditions.
/// `g_adjusted` is the metric `v` was built for; it feeds the intrinsic
/// distances of the injectivity proxy.
pub fn verify_p_embedding(u: &PEmbedding, g_adjusted: &SymTensorField, tol: &VerifyTolerances) -> Result<PEmbeddingReport> {
    let mut simple_b_map = true;
    let mut min_boundary_dx = f64::INFINITY;
    for f in 0..u.len() {
        if u.r[f] == 0.0 {
            simple_b_map &= u.x[f] == 0.0;
            min_boundary_dx = min_boundary_dx.min(u.dx[f].abs());
        } else {
            simple_b_map &= u.x[f] > 0.0;
        }
    }
    let transversal = min_boundary_dx > tol.transversality;
    let min_singular_value = u.jacobians.iter().map(|j| j.min_singular_value()).fold(f64::INFINITY, f64::min);
    let embedding = embedding_diagnostics(&u.v, g_adjusted)?;
    let injectivity_ratio = embedding.injectivity_ratio;
    Ok(PEmbeddingReport {
        simple_b_map,
        transversal,
        min_boundary_dx,
        min_singular_value,
        immersion: min_singular_value > tol.immersion,
        injectivity_ratio,
        injective: injectivity_ratio > tol.injectivity,
        embedding,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureInequality {
    /// Induced `kappa_inf` at each `r = 0` node.
    pub induced: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// `-lambda^2`.
    pub bound: f64,
    /// `min >= bound - tol`.
    pub holds: bool,
    /// Largest `|induced - expected|`, when an expected field was supplied.
    pub max_deviation: Option<f64>,
}

/// `kappa_inf` of `u^* h_{-lambda^2}` with respect to `x`: in the compactified
/// frame the induced metric is `lambda^{-2} M`, so `kappa_inf = -lambda^2 |dx|^2_M`.
pub fn induced_curvature_inequality(u: &PEmbedding, expected: Option<&[f64]>, tol: f64) -> Result<CurvatureInequality> {
    let lambda = u.model.lambda;
    let mut induced = Vec::new();
    for f in 0..u.len() {
        if u.r[f] != 0.0 {
            continue;
        }
        let minv = u.compactified_pullback(f).inverse().ok_or_else(|| Error::SingularMetric { node: u.grid.coords(f) })?;
        induced.push(-lambda * lambda * u.dx[f] * u.dx[f] * minv.get(0, 0));
    }
    if let Some(e) = expected {
        if e.len() != induced.len() {
            return Err(Error::GridMismatch { expected: induced.len(), found: e.len() });
        }
    }
    let min = induced.iter().copied().fold(f64::INFINITY, f64::min);
    let max = induced.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = u.model.curvature();
    let max_deviation = expected.map(|e| induced.iter().zip(e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    Ok(CurvatureInequality { holds: min >= bound - tol, induced, min, max, bound, max_deviation })
}

/// The coordinate half-plane `{(X, Y_1, 0, ..., 0)}`: a totally geodesic
/// p-submanifold, parametrised by `x in [0, 1]` and `y in [-1, 1]`.
pub fn synthetic_half_plane(lambda: f64, n: usize, nodes: usize) -> Result<PEmbedding> {
    if n < 1 {
        return Err(Error::InvalidParameter("half-plane needs N >= 1"));
    }
    let grid = ProductGrid::new(vec![Axis::closed(nodes, 0.0, 1.0), Axis::closed(nodes, -1.0, 1.0)]);
    let len = grid.len();
    let mut points = vec![0.0; len * n];
    let mut r = Vec::with_capacity(len);
    let mut jacobians = Vec::with_capacity(len);
    for f in 0..len {
        let c = grid.coords(f);
        r.push(c[0]);
        points[f * n] = c[1];
        let mut j = Matrix::zeros(n, 2);
        j.set(0, 1, 1.0);
        jacobians.push(j);
    }
    let v = EuclideanEmbedding { grid, n, points, jacobians, provenance: Provenance::Analytic(String::from("coordinate half-plane")) };
    let model = HalfSpaceModel::new(n, lambda)?;
    let x = r.clone();
    let dx = vec![1.0; len];
    Ok(assemble(model, r, x, dx, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdf::{assemble_bdf, assemble_g, compute_phi, flow_collar, make_cutoff, CutoffKind, FlowOptions};
    use crate::builtins;
    use crate::embed::{analytic_embedding, AnalyticSurface};
    use crate::math;

    #[test]
    fn half_plane_is_the_equality_case() {
        for lambda in [0.5, 1.0, 2.0, 3.0] {
            let u = synthetic_half_plane(lambda, 4, 9).unwrap();
            let c = induced_curvature_inequality(&u, None, 1e-12).unwrap();
            assert_eq!(c.induced.len(), 9);
            for k in &c.induced {
                assert!((k + lambda * lambda).abs() <= 1e-12);
            }
            assert!(c.holds);
        }
        assert!(HalfSpaceModel::new(3, 0.0).is_err());
    }

    /// Normal-form torus `dr^2 / c^2 + (1+r)^2 dy^2`, `Q = 0`: `x = r`, and `G` is
    /// `(1/c^2 - 1) dr^2 + (1+r)^2 dy^2`, a surface of revolution.
    #[test]
    fn analytic_path_is_an_isometry() {
        let c = 0.5;
        let spec = builtins::normal_form_const_k(c).unwrap();
        let b = spec.manifold().boundary_grid(0, 32).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 17, &FlowOptions::default()).unwrap();
        let p = assemble_bdf(&nf, compute_phi(make_cutoff(0.5, CutoffKind::Zero).unwrap(), 64).unwrap()).unwrap();
        let g = assemble_g(&nf, &p).unwrap();
        let grid = nf.grid.product();
        let parse = |s: &str| crate::expr::Expr::parse(s, &["t"]).unwrap();
        let a = parse(&alloc::format!("{}", math::sqrt(1.0 / (c * c) - 1.0)));
        let surface = AnalyticSurface::Revolution { a, b: parse("1 + t") };
        let v = analytic_embedding(&surface, &grid).unwrap();
        let u = compose(&p, &nf.grid, v, 1.0).unwrap();
        let iso = pullback_halfspace(&u, &g.x2g).unwrap();
        assert!(iso.max_residual < 1e-12, "{}", iso.max_residual);
        let report = verify_p_embedding(&u, &g.g, &VerifyTolerances::default()).unwrap();
        assert!(report.passed(), "{report:?}");
        let k = induced_curvature_inequality(&u, None, 1e-9).unwrap();
        assert!((k.min + c * c).abs() < 1e-12 && (k.max + c * c).abs() < 1e-12);
        // X row equals dx exactly, and r = 0 maps to X = 0
        for f in 0..u.len() {
            assert_eq!(u.jacobians[f].get(0, 0), u.dx[f]);
            assert_eq!(u.image(f)[0], p.x(u.r[f]));
        }
    }

    #[test]
    fn zeroed_boundary_differential_fails_transversality() {
        let u0 = synthetic_half_plane(1.0, 3, 9).unwrap();
        let g = SymTensorField::new(crate::field::Frame::Coordinate, vec![SymMat::identity(2); u0.len()]);
        let mut u = u0.clone();
        u.dx[3] = 0.0;
        let ok = verify_p_embedding(&u0, &g, &VerifyTolerances::default()).unwrap();
        let bad = verify_p_embedding(&u, &g, &VerifyTolerances::default()).unwrap();
        assert!(ok.transversal && !bad.transversal);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let spec = builtins::scaled_disk(2, 4.0).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        let p = assemble_bdf(&nf, compute_phi(make_cutoff(0.5, CutoffKind::Smoothstep5).unwrap(), 64).unwrap()).unwrap();
        let u = synthetic_half_plane(1.0, 3, 9).unwrap();
        assert!(matches!(compose(&p, &nf.grid, u.v, 1.0), Err(Error::GridMismatch { .. })));
    }
}
