//! The profile `phi(r) = -int_0^r Q(t)/t dt` and the bdf `x = e^phi r`.

use alloc::vec::Vec;

use super::cutoff::{Cutoff, CutoffKind};
use super::flow::NormalFormData;
use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;
use crate::math;
use crate::metric::{MetricSpec, ScalarField};
use crate::quad::adaptive_simpson;

/// Absolute quadrature tolerance for the whole table.
pub const PHI_TOL: f64 = 1e-10;
/// Tolerance on `|(1 + r phi') - (1 - Q)|`.
pub const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BdfProfile {
    pub cutoff: Cutoff,
    /// Uniform nodes on `[0, eps]` and `phi` there.
    pub table_r: Vec<f64>,
    pub table_phi: Vec<f64>,
    /// `x_c = e^{phi(eps/2)} eps/2`; `None` until [`assemble_bdf`], and for `Q = 0`.
    pub plateau: Option<f64>,
}

/// Tabulates `phi` on `n_table` intervals of `[0, eps]`, then checks
/// `1 + r phi' = 1 - Q` at 50 points.
pub fn compute_phi(cutoff: Cutoff, n_table: usize) -> Result<BdfProfile> {
    if n_table < 2 {
        return Err(Error::InvalidParameter("phi table needs at least 2 intervals"));
    }
    let eps = cutoff.epsilon;
    let dr = eps / n_table as f64;
    let tol = PHI_TOL / n_table as f64;
    let mut table_r = Vec::with_capacity(n_table + 1);
    let mut table_phi = Vec::with_capacity(n_table + 1);
    let mut phi = 0.0;
    table_r.push(0.0);
    table_phi.push(0.0);
    let f = |t: f64| cutoff.q_over_r(t);
    for k in 1..=n_table {
        let (a, b) = ((k - 1) as f64 * dr, k as f64 * dr);
        phi -= adaptive_simpson(&f, a, b, tol)?;
        table_r.push(b);
        table_phi.push(phi);
    }
    let profile = BdfProfile { cutoff, table_r, table_phi, plateau: None };
    let samples: Vec<f64> = (0..50).map(|k| eps * (k as f64 + 0.5) / 50.0).collect();
    let dev = profile.cutoff_identity_defect(&samples)?;
    if dev > IDENTITY_TOL {
        return Err(Error::ConsistencyFailure { max_rel: dev, tol: IDENTITY_TOL });
    }
    Ok(profile)
}

/// Adds the constant extension `x_c` past `eps/2`.
pub fn assemble_bdf(nf: &NormalFormData, mut profile: BdfProfile) -> Result<BdfProfile> {
    if (nf.epsilon() - profile.epsilon()).abs() > 1e-15 * nf.epsilon() {
        return Err(Error::InvalidParameter("profile and collar use different eps"));
    }
    if profile.cutoff.has_plateau() {
        let half = 0.5 * profile.epsilon();
        profile.plateau = Some(math::exp(profile.phi(half)) * half);
    }
    Ok(profile)
}

impl BdfProfile {
    pub fn epsilon(&self) -> f64 {
        self.cutoff.epsilon
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let f = |t: f64| self.cutoff.q_over_r(t);
        adaptive_simpson(&f, a, b, 1e-15)
    }

    fn phi_checked(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || self.cutoff.kind == CutoffKind::Zero {
            return Ok(0.0);
        }
        let eps = self.epsilon();
        let n = self.table_r.len() - 1;
        if r >= eps {
            return Ok(self.table_phi[n] - math::ln(r / eps));
        }
        let dr = eps / n as f64;
        let k = ((r / dr) as usize).min(n - 1);
        Ok(self.table_phi[k] - self.integral(self.table_r[k], r)?)
    }

    /// `phi(r)`; past `eps` continued by `Q = 1`.
    pub fn phi(&self, r: f64) -> f64 {
        self.phi_checked(r).unwrap_or(f64::NAN)
    }

    /// `x(r)`, constant `x_c` from `eps/2` on once the plateau is set.
    pub fn x(&self, r: f64) -> f64 {
        match self.plateau {
            Some(xc) if r >= 0.5 * self.epsilon() => xc,
            _ if r <= 0.0 => 0.0,
            _ => self.x_unclamped(r),
        }
    }

    /// `e^{phi(r)} r` with no constant extension.
    pub fn x_unclamped(&self, r: f64) -> f64 {
        math::exp(self.phi(r)) * r
    }

    /// `dx/dr = e^phi (1 + r phi') = e^phi (1 - Q)`.
    pub fn dx(&self, r: f64) -> f64 {
        match self.plateau {
            Some(_) if r >= 0.5 * self.epsilon() => 0.0,
            _ => math::exp(self.phi(r.max(0.0))) * self.one_plus_r_dphi(r),
        }
    }

    /// Closed form `1 + r phi'(r) = 1 - Q(r)`.
    pub fn one_plus_r_dphi(&self, r: f64) -> f64 {
        1.0 - self.cutoff.q(r)
    }

    /// `1 + r phi'(r)` with `phi'` from a fourth-order difference of the
    /// quadrature itself.
    pub fn one_plus_r_dphi_numeric(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(1.0);
        }
        let h = (1e-4 * self.epsilon()).min(r / 3.0);
        // phi(r + a) - phi(r - a) = -int_{r-a}^{r+a} Q/t
        let d1 = -self.integral(r - h, r + h)?;
        let d2 = -self.integral(r - 2.0 * h, r + 2.0 * h)?;
        let dphi = (8.0 * d1 - d2) / (12.0 * h);
        Ok(1.0 + r * dphi)
    }

    /// Max of `|(1 + r phi') - (1 - Q)|` over `samples`, `phi'` numeric.
    pub fn cutoff_identity_defect(&self, samples: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &r in samples {
            let d = (self.one_plus_r_dphi_numeric(r)? - self.one_plus_r_dphi(r)).abs();
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

/// `x` as a function on the manifold: `X(r(p))`.
pub struct ProfileBdf<'a> {
    pub spec: &'a MetricSpec,
    pub profile: &'a BdfProfile,
}

impl ScalarField for ProfileBdf<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.profile.x(self.spec.reference_bdf().value(p))
    }

    fn gradient(&self, p: &[f64]) -> [f64; MAX_DIM] {
        let r = self.spec.reference_bdf();
        let s = self.profile.dx(r.value(p));
        let mut g = r.gradient(p);
        for v in g.iter_mut() {
            *v *= s;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdf::cutoff::make_cutoff;
    use crate::bdf::flow::{flow_collar, FlowOptions};
    use crate::builtins;
    use crate::curvature::kappa_infinity;

    fn profile(kind: CutoffKind, eps: f64) -> BdfProfile {
        compute_phi(make_cutoff(eps, kind).unwrap(), 256).unwrap()
    }

    #[test]
    fn zero_cutoff_gives_x_equal_r() {
        let p = profile(CutoffKind::Zero, 0.5);
        assert!(p.table_phi.iter().all(|&v| v == 0.0));
        for r in [0.0, 0.1, 0.3, 0.7] {
            assert_eq!(p.x(r), r);
        }
    }

    #[test]
    fn piecewise_linear_phi() {
        let p = profile(CutoffKind::PiecewiseLinear, 0.5);
        for k in 0..=20 {
            let r = 0.25 * k as f64 / 20.0;
            assert!((p.phi(r) + 2.0 * r / 0.5).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn smoothstep_identity_and_monotonicity() {
        let p = profile(CutoffKind::Smoothstep5, 0.5);
        let samples: Vec<f64> = (0..50).map(|k| 0.5 * k as f64 / 49.0).collect();
        assert!(p.cutoff_identity_defect(&samples).unwrap() < 1e-8);
        for w in samples.windows(2).filter(|w| w[1] <= 0.25) {
            assert!(p.x_unclamped(w[1]) > p.x_unclamped(w[0]));
        }
        for &r in &samples {
            let v = p.one_plus_r_dphi(r);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn plateau_matches_the_quadrature() {
        let spec = builtins::scaled_disk(2, 4.0).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        let p = assemble_bdf(&nf, profile(CutoffKind::Smoothstep5, 0.5)).unwrap();
        let xc = p.plateau.unwrap();
        // independent oracle: the smoothstep integral in closed form,
        // int_0^{1} (6u^4 - 15u^3 + 10u^2) du = 6/5 - 15/4 + 10/3
        let phi_half = -(6.0 / 5.0 - 15.0 / 4.0 + 10.0 / 3.0);
        assert!((xc - libm::exp(phi_half) * 0.25).abs() < 1e-12);
        for r in [0.26, 0.3, 0.45, 0.5] {
            assert!((p.x_unclamped(r) - xc).abs() < 1e-12, "{r}");
            assert_eq!(p.dx(r), 0.0);
            assert_eq!(p.x(r), xc);
        }
        assert!(assemble_bdf(&nf, profile(CutoffKind::Smoothstep5, 0.25)).is_err());
    }

    #[test]
    fn profile_bdf_is_a_bdf_with_the_same_kappa() {
        let spec = builtins::scaled_disk(2, 4.0).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        let p = assemble_bdf(&nf, profile(CutoffKind::Smoothstep5, 0.5)).unwrap();
        let x = ProfileBdf { spec: &spec, profile: &p };
        for node in &b.nodes {
            let k = kappa_infinity(&spec, &x, &node.point).unwrap();
            assert!((k + 0.25).abs() < 1e-12);
        }
    }
}
