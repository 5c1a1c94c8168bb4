//! Sampled tensor fields with an explicit frame tag.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{SymMat, MAX_DIM};
use crate::metric::{MetricSpec, ScalarField};

/// `ZeroFrame` components are taken against `{r d_r, r d_y}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Coordinate,
    ZeroFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTensor {
    pub frame: Frame,
    pub value: SymMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub frame: Frame,
    pub values: Vec<SymMat>,
}

impl SymTensorField {
    pub fn new(frame: Frame, values: Vec<SymMat>) -> SymTensorField {
        SymTensorField { frame, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sub(&self, other: &SymTensorField) -> Result<SymTensorField> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch);
        }
        if self.len() != other.len() {
            return Err(Error::GridMismatch { expected: self.len(), found: other.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a.sub(b)).collect();
        Ok(SymTensorField { frame: self.frame, values })
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.min_eigenvalue()).collect()
    }
}

/// Covector field in the 0-coframe `{dr/r, dy/r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOneForm {
    pub dim: usize,
    pub values: Vec<[f64; MAX_DIM]>,
}

impl ZeroOneForm {
    /// `df / f` for a boundary defining function `f`, sampled at `nodes`.
    ///
    /// In the 0-coframe the components are `r d_mu f / f`. Where `f = 0` the
    /// ratio `r / f` is replaced by its boundary limit `<dr, dr> / <df, dr>`.
    pub fn log_differential(spec: &MetricSpec, f: &dyn ScalarField, nodes: &[Vec<f64>]) -> Result<ZeroOneForm> {
        let m = spec.dim();
        let r = spec.reference_bdf();
        let mut values = Vec::with_capacity(nodes.len());
        for p in nodes {
            let df = f.gradient(p);
            let fv = f.value(p);
            let ratio = if fv.abs() > 1e-14 {
                r.value(p) / fv
            } else {
                let inv = spec.inverse_bar(p)?;
                let dr = r.gradient(p);
                inv.bilinear(&dr, &dr) / inv.bilinear(&df, &dr)
            };
            let mut c = [0.0; MAX_DIM];
            for k in 0..m {
                c[k] = ratio * df[k];
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "0-one-form" });
            }
            values.push(c);
        }
        Ok(ZeroOneForm { dim: m, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use alloc::vec;

    #[test]
    fn frame_tags_do_not_mix() {
        let a = SymTensorField::new(Frame::Coordinate, vec![SymMat::identity(2)]);
        let b = SymTensorField::new(Frame::ZeroFrame, vec![SymMat::identity(2)]);
        assert_eq!(a.sub(&b), Err(Error::FrameMismatch));
        assert_eq!(a.sub(&a).unwrap().values[0], SymMat::zeros(2));
    }

    #[test]
    fn log_differential_stays_finite_toward_the_boundary() {
        let spec = builtins::scaled_disk(2, 4.0).unwrap();
        let rho = spec.reference_bdf();
        let nodes: Vec<Vec<f64>> = (0..12)
            .map(|k| {
                let r = libm::pow(0.5, k as f64);
                let s = libm::sqrt(1.0 - r);
                vec![s * 0.6, s * 0.8]
            })
            .chain(core::iter::once(vec![0.6, 0.8]))
            .collect();
        let form = ZeroOneForm::log_differential(&spec, rho, &nodes).unwrap();
        let max = form.values.iter().map(|c| libm::hypot(c[0], c[1])).fold(0.0, f64::max);
        // d rho / rho in the 0-coframe is -2 y, of length 2|y| <= 2
        assert!(max <= 2.0 + 1e-12, "{max}");
    }
}
