//! Sectional curvature at infinity and interior sectional curvature.
//!
//! Interior curvatures of `g = gbar / r^2` are computed from the curvature of the
//! compactified metric through the conformal change formula
//!
//! ```text
//! K_g(P) = r^2 Kbar(P) + r (Hess_gbar r ⊙ gbar)(u,w,w,u) / Gram_gbar(u,w) - |dr|^2_gbar
//! ```
//!
//! so that nothing singular is ever differentiated. Christoffel symbols of `gbar`
//! come from symbolic first derivatives; their derivatives from a fourth-order
//! central difference with step `min(h_max, r / 10)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{SymMat, MAX_DIM};
use crate::manifold::{BoundaryNode, ModelKind};
use crate::metric::{check_bdf_at, MetricSpec, ScalarField};

type Christoffel = [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM];

/// `kappa_inf` sampled on boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaInfinityField {
    pub params: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl KappaInfinityField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `kappa_inf = -|dx|^2_{x^2 g}` at a boundary point, for any bdf `x`.
///
/// With `x^2 g = (x/r)^2 gbar` and `x/r -> <dx,dr>/<dr,dr>` on the boundary this is
/// `-|dx|^2 |dr|^4 / <dx,dr>^2` (all norms in `gbar`), finite at `r = 0`.
pub fn kappa_infinity(spec: &MetricSpec, x: &dyn ScalarField, p: &[f64]) -> Result<f64> {
    check_bdf_at(x, p)?;
    check_bdf_at(spec.reference_bdf(), p)?;
    let inv = spec.inverse_bar(p)?;
    let dx = x.gradient(p);
    let dr = spec.reference_bdf().gradient(p);
    let xx = inv.bilinear(&dx, &dx);
    let rr = inv.bilinear(&dr, &dr);
    let xr = inv.bilinear(&dx, &dr);
    Ok(-xx * rr * rr / (xr * xr))
}

pub fn kappa_field(spec: &MetricSpec, x: &dyn ScalarField, nodes: &[BoundaryNode]) -> Result<KappaInfinityField> {
    let values = nodes.iter().map(|n| kappa_infinity(spec, x, &n.point)).collect::<Result<Vec<_>>>()?;
    Ok(KappaInfinityField { params: nodes.iter().map(|n| n.params.clone()).collect(), values })
}

/// `kappa_inf` of `lambda^2 g` given that of `g`.
pub fn kappa_rescale(kappa: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be finite and non-zero"));
    }
    Ok(kappa / (lambda * lambda))
}

/// Tangent two-plane at an interior point, spanned by `u` and `w` (coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPlane {
    pub base: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOptions {
    pub r_min: f64,
    pub h_max: f64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions { r_min: 1e-3, h_max: 1e-3 }
    }
}

fn christoffel(spec: &MetricSpec, p: &[f64]) -> Result<Christoffel> {
    let m = spec.dim();
    let inv = spec.inverse_bar(p)?;
    let d = spec.bar_partials(p);
    let mut gamma = [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM];
    for a in 0..m {
        for b in 0..m {
            for c in b..m {
                let mut s = 0.0;
                for e in 0..m {
                    s += inv.get(a, e) * (d[b].get(e, c) + d[c].get(e, b) - d[e].get(b, c));
                }
                gamma[a][b][c] = 0.5 * s;
                gamma[a][c][b] = 0.5 * s;
            }
        }
    }
    Ok(gamma)
}

/// `d_k Gamma^a_bc` by a fourth-order central difference in coordinate `k`.
fn christoffel_derivatives(spec: &MetricSpec, p: &[f64], h: f64) -> Result<[Christoffel; MAX_DIM]> {
    let m = spec.dim();
    let mut out = [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM];
    let mut q = [0.0; MAX_DIM];
    for k in 0..m {
        let mut samples = [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; 4];
        for (slot, offset) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            q[..m].copy_from_slice(&p[..m]);
            q[k] += offset * h;
            samples[slot] = christoffel(spec, &q[..m])?;
        }
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    out[k][a][b][c] = (samples[0][a][b][c] - 8.0 * samples[1][a][b][c] + 8.0 * samples[2][a][b][c]
                        - samples[3][a][b][c])
                        / (12.0 * h);
                }
            }
        }
    }
    Ok(out)
}

/// `gbar(R(u,w)w, u)` for the compactified metric.
fn bar_riemann_uwwu(spec: &MetricSpec, p: &[f64], u: &[f64], w: &[f64], h: f64) -> Result<f64> {
    let m = spec.dim();
    let g = spec.eval_bar(p)?;
    let gamma = christoffel(spec, p)?;
    let dgamma = christoffel_derivatives(spec, p, h)?;
    let mut total = 0.0;
    for a in 0..m {
        // (R(u,w)w)^a = R^a_{bcd} w^b u^c w^d
        let mut rw = 0.0;
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut r = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..m {
                        r += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    rw += r * w[b] * u[c] * w[d];
                }
            }
        }
        for f in 0..m {
            total += g.get(a, f) * rw * u[f];
        }
    }
    Ok(total)
}

fn bar_hessian(spec: &MetricSpec, p: &[f64], gamma: &Christoffel) -> SymMat {
    let m = spec.dim();
    let r = spec.reference_bdf();
    let dr = r.gradient(p);
    let mut hess = r.hessian(p);
    for b in 0..m {
        for c in b..m {
            let corr: f64 = (0..m).map(|a| gamma[a][b][c] * dr[a]).sum();
            hess.set(b, c, hess.get(b, c) - corr);
        }
    }
    hess
}

/// Sectional curvature of `g = gbar / r^2` on an interior two-plane.
pub fn sectional_curvature(spec: &MetricSpec, plane: &TwoPlane, opts: &CurvatureOptions) -> Result<f64> {
    let p = &plane.base;
    let (u, w) = (&plane.u, &plane.w);
    let m = spec.dim();
    if p.len() != m || u.len() != m || w.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: p.len().min(u.len()).min(w.len()) });
    }
    let rf = spec.reference_bdf();
    let r = rf.value(p);
    if !(r >= opts.r_min) {
        return Err(Error::TooCloseToBoundary { r, r_min: opts.r_min });
    }
    let g = spec.eval_bar(p)?;
    let (uu, ww, uw) = (g.bilinear(u, u), g.bilinear(w, w), g.bilinear(u, w));
    let gram = uu * ww - uw * uw;
    let normalized = gram / (uu * ww);
    if !(normalized >= 1e-12) {
        return Err(Error::DegeneratePlane { gram: normalized });
    }
    let h = opts.h_max.min(r / 10.0);
    let rbar = bar_riemann_uwwu(spec, p, u, w, h)?;
    let gamma = christoffel(spec, p)?;
    let hess = bar_hessian(spec, p, &gamma);
    let kn = hess.bilinear(u, u) * ww + hess.bilinear(w, w) * uu - 2.0 * hess.bilinear(u, w) * uw;
    let inv = spec.inverse_bar(p)?;
    let dr = rf.gradient(p);
    let dr2 = inv.bilinear(&dr, &dr);
    Ok(r * r * rbar / gram + r * kn / gram - dr2)
}

/// Coordinate two-plane families used for boundary limit scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneFamily {
    /// Inward normal direction and the first boundary direction.
    Normal,
    /// Two tangential coordinate directions: `(d_y1, d_y2)` of the chart. On the
    /// collar-torus these are boundary directions and need `m = 3`.
    Tangential,
}

/// Point on the straight coordinate ray `node.point + t * node.inward` where the
/// reference bdf equals `r`.
pub fn ray_point(spec: &MetricSpec, node: &BoundaryNode, r: f64) -> Result<Vec<f64>> {
    let f = spec.reference_bdf();
    let at = |t: f64| -> Vec<f64> { node.point.iter().zip(&node.inward).map(|(p, d)| p + t * d).collect() };
    let (mut lo, mut hi) = (0.0, r.max(1e-6));
    let mut guard = 0;
    while f.value(&at(hi)) < r {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 || !spec.manifold().contains(&at(hi), 1e-12) {
            return Err(Error::FlowExitsChart { start: node.point.clone(), time: hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.value(&at(mid)) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

pub fn plane_at(spec: &MetricSpec, node: &BoundaryNode, family: PlaneFamily, base: Vec<f64>) -> Result<TwoPlane> {
    let m = spec.dim();
    let (u, w) = match family {
        PlaneFamily::Normal => (node.inward.clone(), node.tangents[0].clone()),
        PlaneFamily::Tangential => match spec.manifold().kind() {
            ModelKind::Disk => {
                let mut e1 = alloc::vec![0.0; m];
                let mut e2 = alloc::vec![0.0; m];
                e1[0] = 1.0;
                e2[1] = 1.0;
                (e1, e2)
            }
            ModelKind::CollarTorus => {
                if m < 3 {
                    return Err(Error::InvalidParameter("tangential planes need two boundary directions"));
                }
                (node.tangents[0].clone(), node.tangents[1].clone())
            }
        },
    };
    Ok(TwoPlane { base, u, w })
}

/// `(r, |K(P_r) - kappa_inf|)` along the ray through `node` at the given radii.
pub fn curvature_limit_scan(
    spec: &MetricSpec,
    node: &BoundaryNode,
    family: PlaneFamily,
    radii: &[f64],
    opts: &CurvatureOptions,
) -> Result<Vec<(f64, f64)>> {
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("radii must decrease strictly"));
    }
    let kappa = kappa_infinity(spec, spec.reference_bdf(), &node.point)?;
    radii
        .iter()
        .map(|&r| {
            let base = ray_point(spec, node, r)?;
            let plane = plane_at(spec, node, family, base)?;
            let k = sectional_curvature(spec, &plane, opts)?;
            Ok((r, (k - kappa).abs()))
        })
        .collect()
}
