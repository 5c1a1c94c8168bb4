//! Cutoff functions `Q` with `Q(0) = 0` and `Q = 1` on `[eps/2, inf)`.

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// `S(u) = 6u^5 - 15u^4 + 10u^3`, `C^2` at the joins.
    Smoothstep5,
    /// `psi(u) / (psi(u) + psi(1 - u))` with `psi(t) = exp(-1/t)`; `C^inf`.
    SmoothExp,
    /// `Q = min(2r/eps, 1)`. Test-only.
    PiecewiseLinear,
    /// `Q = 0`: no plateau, `x = r`. Test-only.
    Zero,
}

impl CutoffKind {
    pub fn from_name(name: &str) -> Result<CutoffKind> {
        match name {
            "smoothstep5" => Ok(CutoffKind::Smoothstep5),
            "smooth-exp" => Ok(CutoffKind::SmoothExp),
            "piecewise-linear" => Ok(CutoffKind::PiecewiseLinear),
            "zero" => Ok(CutoffKind::Zero),
            _ => Err(Error::InvalidParameter("unknown cutoff kind")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CutoffKind::Smoothstep5 => "smoothstep5",
            CutoffKind::SmoothExp => "smooth-exp",
            CutoffKind::PiecewiseLinear => "piecewise-linear",
            CutoffKind::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub kind: CutoffKind,
    pub epsilon: f64,
}

pub fn make_cutoff(epsilon: f64, kind: CutoffKind) -> Result<Cutoff> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter("cutoff needs eps > 0"));
    }
    Ok(Cutoff { kind, epsilon })
}

fn psi(t: f64) -> f64 {
    if t > 0.0 {
        math::exp(-1.0 / t)
    } else {
        0.0
    }
}

fn dpsi(t: f64) -> f64 {
    if t > 0.0 {
        psi(t) / (t * t)
    } else {
        0.0
    }
}

impl Cutoff {
    fn u(&self, r: f64) -> f64 {
        (2.0 * r / self.epsilon).clamp(0.0, 1.0)
    }

    /// Whether `Q` has reached 1 (so `dx = 0`) at `r`.
    pub fn has_plateau(&self) -> bool {
        self.kind != CutoffKind::Zero
    }

    pub fn q(&self, r: f64) -> f64 {
        let u = self.u(r);
        match self.kind {
            CutoffKind::Smoothstep5 => u * u * u * (u * (6.0 * u - 15.0) + 10.0),
            CutoffKind::SmoothExp => {
                let (a, b) = (psi(u), psi(1.0 - u));
                a / (a + b)
            }
            CutoffKind::PiecewiseLinear => u,
            CutoffKind::Zero => 0.0,
        }
    }

    /// `dQ/dr`.
    pub fn dq(&self, r: f64) -> f64 {
        let u = 2.0 * r / self.epsilon;
        if !(u > 0.0 && u < 1.0) {
            return 0.0;
        }
        let du = 2.0 / self.epsilon;
        match self.kind {
            CutoffKind::Smoothstep5 => du * 30.0 * u * u * (u - 1.0) * (u - 1.0),
            CutoffKind::SmoothExp => {
                let (a, b) = (psi(u), psi(1.0 - u));
                du * (dpsi(u) * b + a * dpsi(1.0 - u)) / ((a + b) * (a + b))
            }
            CutoffKind::PiecewiseLinear => du,
            CutoffKind::Zero => 0.0,
        }
    }

    /// `Q(r) / r` in factored form; never divides by a small `r`.
    pub fn q_over_r(&self, r: f64) -> f64 {
        let u = self.u(r);
        if u >= 1.0 {
            return match self.kind {
                CutoffKind::Zero => 0.0,
                _ => 1.0 / r,
            };
        }
        let s = 2.0 / self.epsilon;
        match self.kind {
            CutoffKind::Smoothstep5 => s * u * u * (u * (6.0 * u - 15.0) + 10.0),
            CutoffKind::SmoothExp => {
                // psi(u) / u = exp(-1/u) / u -> 0 as u -> 0
                if u <= 0.0 {
                    return 0.0;
                }
                let (a, b) = (psi(u), psi(1.0 - u));
                s * (a / u) / (a + b)
            }
            CutoffKind::PiecewiseLinear => s,
            CutoffKind::Zero => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [CutoffKind; 4] = [CutoffKind::Smoothstep5, CutoffKind::SmoothExp, CutoffKind::PiecewiseLinear, CutoffKind::Zero];

    #[test]
    fn endpoint_values() {
        for kind in KINDS {
            let q = make_cutoff(0.5, kind).unwrap();
            assert_eq!(q.q(0.0), 0.0);
            if kind != CutoffKind::Zero {
                assert_eq!(q.q(0.25), 1.0);
                assert_eq!(q.q(0.4), 1.0);
            }
        }
        let s = make_cutoff(0.5, CutoffKind::Smoothstep5).unwrap();
        assert_eq!(s.q(0.125), 0.5);
        let e = make_cutoff(0.5, CutoffKind::SmoothExp).unwrap();
        assert!((e.q(0.125) - 0.5).abs() < 1e-15);
        assert!(make_cutoff(0.0, CutoffKind::Smoothstep5).is_err());
    }

    #[test]
    fn derivatives_and_factored_form() {
        for kind in KINDS {
            let q = make_cutoff(0.5, kind).unwrap();
            for k in 1..50 {
                let r = 0.3 * k as f64 / 50.0;
                assert!((0.0..=1.0).contains(&q.q(r)));
                assert!((q.q_over_r(r) * r - q.q(r)).abs() < 1e-13, "{kind:?} {r}");
                if kind != CutoffKind::PiecewiseLinear {
                    let h = 1e-6;
                    let fd = (q.q(r + h) - q.q(r - h)) / (2.0 * h);
                    assert!((fd - q.dq(r)).abs() < 1e-6, "{kind:?} {r}: {fd} vs {}", q.dq(r));
                }
            }
            assert!(q.q_over_r(0.0).is_finite());
        }
    }
}
