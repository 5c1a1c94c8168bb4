//! Collar normal form from the flow of `Vbar = grad_gbar r / |dr|^2_gbar`.
//!
//! Along the flow `Vbar r = 1`, so flow time is the value of `r`, and the level
//! sets of `r` stay `gbar`-orthogonal to the flow lines. In the coordinates
//! `(r, s)` (flow time, boundary parameters) the compactified metric becomes
//! `dr^2 / K^2 + h(r)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::CollarGrid;
use crate::linalg::{Matrix, SymMat, MAX_DIM};
use crate::manifold::BoundaryGrid;
use crate::math;
use crate::metric::{MetricSpec, ScalarField};
use crate::ode::Rk4;

/// `K^2 = |dr|^2_gbar` at each of `nodes`.
pub fn compute_k2(spec: &MetricSpec, nodes: &[Vec<f64>]) -> Result<Vec<f64>> {
    nodes.iter().map(|p| spec.k2(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Lower bound on the number of integration steps over `[0, eps]`.
    pub min_steps: usize,
    /// Allowed `|r(p(t)) - t|`.
    pub flow_tol: f64,
    /// Allowed normalised `dr dy` cross term of the flowed metric.
    pub orthogonality_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { min_steps: 256, flow_tol: 1e-8, orthogonality_tol: 1e-8 }
    }
}

/// Output of [`flow_collar`]. Per-node arrays follow [`CollarGrid::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormData {
    pub grid: CollarGrid,
    pub k2: Vec<f64>,
    /// Boundary block `h(r)`, `(m-1) x (m-1)`.
    pub h: Vec<SymMat>,
    /// Full compactified metric in collar coordinates.
    pub flowed: Vec<SymMat>,
    /// Chart coordinates of each collar node.
    pub points: Vec<Vec<f64>>,
    /// `d(chart) / d(r, s)`, `m x m`.
    pub frames: Vec<Matrix>,
    /// Integration step; `fine_k2[j][k]` is `K^2` at time `k * step` on trajectory `j`.
    pub step: f64,
    pub fine_k2: Vec<Vec<f64>>,
    pub max_flow_defect: f64,
    pub max_cross_term: f64,
}

impl NormalFormData {
    pub fn epsilon(&self) -> f64 {
        self.grid.epsilon
    }

    /// `K^2` at `r = 0` for each boundary node.
    pub fn boundary_k2(&self) -> &[f64] {
        &self.k2[..self.grid.boundary.len()]
    }
}

pub(crate) struct FlowField {
    pub k2: f64,
    pub v: [f64; MAX_DIM],
    pub dv: [[f64; MAX_DIM]; MAX_DIM],
}

/// `Vbar` and its Jacobian at `p`; `None` where `K^2` vanishes or `gbar` is singular.
pub(crate) fn flow_field(spec: &MetricSpec, p: &[f64]) -> Option<FlowField> {
    let m = spec.dim();
    let inv = spec.inverse_bar(p).ok()?;
    let r = spec.reference_bdf();
    let dr = r.gradient(p);
    let hr = r.hessian(p);
    let parts = spec.bar_partials(p);
    let mut w = [0.0; MAX_DIM];
    inv.mul_vec(&dr, &mut w);
    let k2: f64 = (0..m).map(|a| dr[a] * w[a]).sum();
    if !(k2 > 1e-12) || !k2.is_finite() {
        return None;
    }
    let mut v = [0.0; MAX_DIM];
    for a in 0..m {
        v[a] = w[a] / k2;
    }
    let mut dv = [[0.0; MAX_DIM]; MAX_DIM];
    for e in 0..m {
        // d_e w = gbar^{-1} (Hess r)_e - gbar^{-1} (d_e gbar) w
        let mut rhs = [0.0; MAX_DIM];
        let mut pw = [0.0; MAX_DIM];
        parts[e].mul_vec(&w, &mut pw);
        for a in 0..m {
            rhs[a] = hr.get(a, e) - pw[a];
        }
        let mut dw = [0.0; MAX_DIM];
        inv.mul_vec(&rhs, &mut dw);
        let dk2: f64 = (0..m).map(|a| hr.get(a, e) * w[a] + dr[a] * dw[a]).sum();
        for a in 0..m {
            dv[a][e] = dw[a] / k2 - w[a] * dk2 / (k2 * k2);
        }
    }
    Some(FlowField { k2, v, dv })
}

/// Integrates the flow of `Vbar` from every node of `boundary` for time `eps`,
/// with `n_r` collar levels. Tangent vectors are carried along by the linearised
/// flow, which gives the coordinate frame `(d_r, d_s)` at every collar node.
pub fn flow_collar(spec: &MetricSpec, boundary: &BoundaryGrid, eps: f64, n_r: usize, opts: &FlowOptions) -> Result<NormalFormData> {
    let grid = CollarGrid::new(eps, n_r, boundary.clone())?;
    let m = spec.dim();
    let nb = boundary.len();
    let per_level = (opts.min_steps + n_r - 2) / (n_r - 1);
    let steps = per_level * (n_r - 1);
    let dt = eps / steps as f64;
    let r = spec.reference_bdf();

    let total = grid.len();
    let mut k2 = vec![0.0; total];
    let mut h = vec![SymMat::zeros(m - 1); total];
    let mut flowed = vec![SymMat::zeros(m); total];
    let mut points = vec![Vec::new(); total];
    let mut frames = vec![Matrix::zeros(m, m); total];
    let mut fine_k2 = Vec::with_capacity(nb);
    let mut max_flow_defect: f64 = 0.0;
    let mut max_cross_term: f64 = 0.0;

    let mut rk = Rk4::new(m * m);
    for (j, node) in boundary.nodes.iter().enumerate() {
        let start = node.point.clone();
        // state: point, then one tangent per boundary parameter
        let mut y = vec![0.0; m * m];
        y[..m].copy_from_slice(&node.point);
        for (i, t) in node.tangents.iter().enumerate() {
            y[m * (i + 1)..m * (i + 2)].copy_from_slice(t);
        }
        let mut fine = Vec::with_capacity(steps + 1);
        let mut rhs = |t: f64, s: &[f64], ds: &mut [f64]| -> Result<()> {
            let f = flow_field(spec, &s[..m]).ok_or_else(|| Error::VanishingK2 { start: start.clone(), time: t })?;
            ds[..m].copy_from_slice(&f.v[..m]);
            for i in 1..m {
                for a in 0..m {
                    ds[m * i + a] = (0..m).map(|e| f.dv[a][e] * s[m * i + e]).sum();
                }
            }
            Ok(())
        };
        for k in 0..=steps {
            let t = k as f64 * dt;
            let p = &y[..m];
            if !p.iter().all(|c| c.is_finite()) || !spec.manifold().contains(p, 1e-9) {
                return Err(Error::FlowExitsChart { start: node.point.clone(), time: t });
            }
            let f = flow_field(spec, p).ok_or_else(|| Error::VanishingK2 { start: node.point.clone(), time: t })?;
            fine.push(f.k2);
            if k % per_level == 0 {
                let idx = grid.index(k / per_level, j);
                let mut frame = Matrix::zeros(m, m);
                for a in 0..m {
                    frame.set(a, 0, f.v[a]);
                    for i in 1..m {
                        frame.set(a, i, y[m * i + a]);
                    }
                }
                let gbar = spec.eval_bar(p)?;
                let fm = crate::linalg::pullback(&sym_to_matrix(&gbar), &frame)?;
                let defect = (r.value(p) - t).abs();
                max_flow_defect = max_flow_defect.max(defect);
                for i in 1..m {
                    let c = fm.get(0, i).abs() / math::sqrt(fm.get(0, 0) * fm.get(i, i));
                    max_cross_term = max_cross_term.max(c);
                }
                let mut hb = SymMat::zeros(m - 1);
                for a in 1..m {
                    for b in a..m {
                        hb.set(a - 1, b - 1, fm.get(a, b));
                    }
                }
                k2[idx] = f.k2;
                h[idx] = hb;
                flowed[idx] = fm;
                points[idx] = p.to_vec();
                frames[idx] = frame;
            }
            if k < steps {
                rk.step(&mut rhs, t, &mut y, dt)?;
            }
        }
        fine_k2.push(fine);
    }
    if max_flow_defect > opts.flow_tol {
        return Err(Error::FlowDefect { defect: max_flow_defect, tol: opts.flow_tol });
    }
    if max_cross_term > opts.orthogonality_tol {
        return Err(Error::OrthogonalityViolation { defect: max_cross_term, tol: opts.orthogonality_tol });
    }
    Ok(NormalFormData { grid, k2, h, flowed, points, frames, step: dt, fine_k2, max_flow_defect, max_cross_term })
}

fn sym_to_matrix(s: &SymMat) -> Matrix {
    let n = s.dim();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, s.get(i, j));
        }
    }
    out
}

/// Largest `eps_request / 2^k` with `K^2 <= threshold` on the whole collar
/// `[0, eps]`, sampled at every integration step of `nf`.
///
/// The threshold is `1 - margin`, lowered to the midpoint between
/// `max K^2(0)` and `1` when the boundary values already exceed `1 - margin`,
/// so a collar with `K^2 < 1` exists whenever `K^2(0) < 1` everywhere.
pub fn choose_epsilon(nf: &NormalFormData, margin: f64) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter("epsilon margin must lie in (0, 1)"));
    }
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (j, fine) in nf.fine_k2.iter().enumerate() {
        if fine[0] > worst.1 {
            worst = (j, fine[0]);
        }
    }
    if worst.1 >= 1.0 {
        return Err(Error::HypothesisViolation { node: nf.grid.boundary.nodes[worst.0].point.clone(), k2: worst.1 });
    }
    let threshold = if worst.1 <= 1.0 - margin { 1.0 - margin } else { 0.5 * (1.0 + worst.1) };
    let mut eps = nf.epsilon();
    loop {
        let last = ((eps / nf.step) * (1.0 + 1e-12)) as usize;
        let ok = nf.fine_k2.iter().all(|fine| fine[..=last.min(fine.len() - 1)].iter().all(|&v| v <= threshold));
        if ok {
            return Ok(eps);
        }
        eps *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::manifold::{BoundaryEnds, ModelManifold};

    #[test]
    fn k2_matches_symbolic_values() {
        let hyp = builtins::hyperbolic_disk(2).unwrap();
        let k = compute_k2(&hyp, &[vec![0.6, 0.8], vec![0.3, 0.0]]).unwrap();
        assert!((k[0] - 1.0).abs() < 1e-14 && (k[1] - 0.09).abs() < 1e-14);
        let sd = builtins::scaled_disk(2, 4.0).unwrap();
        assert!((compute_k2(&sd, &[vec![0.0, 1.0]]).unwrap()[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn normal_form_is_a_fixed_point() {
        let spec = builtins::normal_form_const_k(0.5).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        for i in 0..9 {
            for j in 0..8 {
                let idx = nf.grid.index(i, j);
                let r = nf.grid.r_nodes[i];
                let y = b.nodes[j].params[0];
                assert!((nf.points[idx][0] - r).abs() < 1e-10 && (nf.points[idx][1] - y).abs() < 1e-10);
                assert!((nf.k2[idx] - 0.25).abs() < 1e-10);
                assert!((nf.h[idx].get(0, 0) - (1.0 + r) * (1.0 + r)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn disk_trajectories_are_radial() {
        let spec = builtins::hyperbolic_disk(2).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        // oracle: s' = -1 / (2 s) on the radius, integrated with ten times as many steps
        let fine = 2560;
        let dt = 0.5 / fine as f64;
        let mut s = 1.0f64;
        let mut radii = vec![1.0];
        for k in 1..=fine {
            let f = |s: f64| -0.5 / s;
            let k1 = f(s);
            let k2 = f(s + 0.5 * dt * k1);
            let k3 = f(s + 0.5 * dt * k2);
            let k4 = f(s + dt * k3);
            s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if k % 320 == 0 {
                radii.push(s);
            }
        }
        for i in 0..9 {
            for j in 0..8 {
                let p = &nf.points[nf.grid.index(i, j)];
                let dir = &b.nodes[j].point;
                assert!((p[0] - radii[i] * dir[0]).abs() < 1e-10);
                assert!((p[1] - radii[i] * dir[1]).abs() < 1e-10);
            }
        }
        assert!(nf.max_cross_term < 1e-12);
    }

    #[test]
    fn flow_past_the_chart_is_rejected() {
        let spec = builtins::normal_form_const_k(0.5).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let err = flow_collar(&spec, &b, 2.0, 9, &FlowOptions::default()).unwrap_err();
        assert!(matches!(err, Error::FlowExitsChart { .. }), "{err:?}");
    }

    #[test]
    fn epsilon_examples() {
        let spec = builtins::scaled_disk(2, 4.0).unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        assert_eq!(choose_epsilon(&nf, 0.05).unwrap(), 0.5);

        let torus = ModelManifold::collar_torus(2, 1.0, &[math::TAU], BoundaryEnds::Inner).unwrap();
        let spec = MetricSpec::from_sources(torus, &[&["1/(0.9 + 0.3*r)", "0"], &["0", "1"]], "r").unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 1.0, 9, &FlowOptions::default()).unwrap();
        assert_eq!(choose_epsilon(&nf, 0.05).unwrap(), 0.125);

        let spec = builtins::borderline().unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 0.5, 9, &FlowOptions::default()).unwrap();
        match choose_epsilon(&nf, 0.05) {
            Err(Error::HypothesisViolation { node, k2 }) => {
                assert_eq!(node, vec![0.0, 0.0]);
                assert!((k2 - 1.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn epsilon_shrinks_below_one_when_boundary_is_close() {
        let torus = ModelManifold::collar_torus(2, 1.0, &[math::TAU], BoundaryEnds::Inner).unwrap();
        let spec = MetricSpec::from_sources(torus, &[&["1/(0.98 + r)", "0"], &["0", "1"]], "r").unwrap();
        let b = spec.manifold().boundary_grid(0, 8).unwrap();
        let nf = flow_collar(&spec, &b, 1.0, 9, &FlowOptions::default()).unwrap();
        let eps = choose_epsilon(&nf, 0.05).unwrap();
        assert!(0.98 + eps <= 0.99 && 0.98 + 2.0 * eps > 0.99, "{eps}");
    }
}
