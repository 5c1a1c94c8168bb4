//! The adjusted compactified metric `G = x^2 g - dx^2` on the collar.

use alloc::vec::Vec;

use super::flow::NormalFormData;
use super::profile::BdfProfile;
use crate::error::{Error, Result};
use crate::field::{Frame, SymTensorField};
use crate::linalg::SymMat;
use crate::math;

pub const CONSISTENCY_TOL: f64 = 1e-9;

/// `G` in collar coordinates `(r, s)`, node order of [`crate::CollarGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedTensorG {
    pub g: SymTensorField,
    /// `x^2 g` in the same coordinates.
    pub x2g: Vec<SymMat>,
    pub min_eigenvalues: Vec<f64>,
    /// `1/K^2 - (1 - Q)^2`, the `dr^2` coefficient of `e^{-2 phi} G`.
    pub rr_coefficient: Vec<f64>,
    /// Largest relative Frobenius gap between the two constructions.
    pub max_disagreement: f64,
}

impl AdjustedTensorG {
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Builds `G` twice: directly as `(x/r)^2 gbar - dx (x) dx` from the flowed
/// metric, and from the normal form `e^{2 phi} [(1/K^2 - (1-Q)^2) dr^2 + h(r)]`.
/// The direct one is returned; the two must agree to `1e-9`.
pub fn assemble_g(nf: &NormalFormData, profile: &BdfProfile) -> Result<AdjustedTensorG> {
    let m = nf.flowed.first().map(|s| s.dim()).ok_or(Error::InvalidParameter("empty collar"))?;
    let nb = nf.grid.boundary.len();
    let mut g = Vec::with_capacity(nf.grid.len());
    let mut x2g = Vec::with_capacity(nf.grid.len());
    let mut min_eigenvalues = Vec::with_capacity(nf.grid.len());
    let mut rr_coefficient = Vec::with_capacity(nf.grid.len());
    let mut worst: f64 = 0.0;
    for (i, &r) in nf.grid.r_nodes.iter().enumerate() {
        let ratio = if r > 0.0 { profile.x(r) / r } else { 1.0 };
        let dx = profile.dx(r);
        let e2phi = math::exp(2.0 * profile.phi(r));
        let one_minus_q = profile.one_plus_r_dphi(r);
        for j in 0..nb {
            let idx = i * nb + j;
            let scaled = nf.flowed[idx].scale(ratio * ratio);
            let mut direct = scaled;
            direct.set(0, 0, scaled.get(0, 0) - dx * dx);

            let coeff = 1.0 / nf.k2[idx] - one_minus_q * one_minus_q;
            let mut formula = SymMat::zeros(m);
            formula.set(0, 0, e2phi * coeff);
            for a in 1..m {
                for b in a..m {
                    formula.set(a, b, e2phi * nf.h[idx].get(a - 1, b - 1));
                }
            }
            let rel = direct.sub(&formula).frobenius() / direct.frobenius();
            worst = worst.max(rel);
            min_eigenvalues.push(direct.min_eigenvalue());
            rr_coefficient.push(coeff);
            x2g.push(scaled);
            g.push(direct);
        }
    }
    if !(worst <= CONSISTENCY_TOL) {
        return Err(Error::ConsistencyFailure { max_rel: worst, tol: CONSISTENCY_TOL });
    }
    Ok(AdjustedTensorG { g: SymTensorField::new(Frame::Coordinate, g), x2g, min_eigenvalues, rr_coefficient, max_disagreement: worst })
}
