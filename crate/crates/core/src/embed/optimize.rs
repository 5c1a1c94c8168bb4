//! Numerical isometric embedding: minimise `sum_n w_n |J_n^T J_n - G_n|_F^2 / sum_n w_n`
//! over the node positions, with `J` from fourth-order difference stencils.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stencil::Stencils;
use super::{EuclideanEmbedding, Provenance};
use crate::error::{Error, Result};
use crate::field::SymTensorField;
use crate::grid::ProductGrid;
use crate::linalg::{SymMat, MAX_DIM};
use crate::math;

/// `m(m+3)/2 + 3`.
pub fn default_ambient_dim(m: usize) -> usize {
    m * (m + 3) / 2 + 3
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Target dimension `N`; `None` means [`default_ambient_dim`].
    pub ambient_dim: Option<usize>,
    pub max_iters: usize,
    /// Stop once the largest relative node defect is at most this.
    pub stop_residual: f64,
    pub seed: u64,
    /// Per-node weights; `None` means `1 / |G_n|_F^2` (relative defects).
    pub weights: Option<Vec<f64>>,
    /// L-BFGS history length.
    pub memory: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking halvings allowed per iteration, starting from step 1.
    pub max_halvings: usize,
    /// Amplitude of the seeded initial perturbation, relative to the grid extent.
    pub perturbation: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            ambient_dim: None,
            max_iters: 20_000,
            stop_residual: 1e-3,
            seed: 0,
            weights: None,
            memory: 12,
            armijo: 1e-4,
            max_halvings: 60,
            perturbation: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// Largest relative node defect after the iteration.
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedEmbedding {
    pub embedding: EuclideanEmbedding,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub final_residual: f64,
    /// Final value of the weighted objective.
    pub objective: f64,
}

struct Problem<'a> {
    stencils: Stencils,
    g: &'a [SymMat],
    weights: Vec<f64>,
    inv_total: f64,
    m: usize,
    n: usize,
}

struct Eval {
    value: f64,
    max_rel: f64,
}

impl Problem<'_> {
    /// Objective, largest relative defect and (optionally) the gradient.
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> Eval {
        let (m, n) = (self.m, self.n);
        let mut jac = [0.0; 64 * MAX_DIM];
        let mut value = 0.0;
        let mut max_rel: f64 = 0.0;
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        for (node, gn) in self.g.iter().enumerate() {
            let jac = &mut jac[..n * m];
            jac.fill(0.0);
            for k in 0..m {
                self.stencils.for_each(node, k, |nb, w| {
                    let p = &x[nb * n..nb * n + n];
                    for a in 0..n {
                        jac[a * m + k] += w * p[a];
                    }
                });
            }
            let mut e = [[0.0; MAX_DIM]; MAX_DIM];
            let mut e2 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let s: f64 = (0..n).map(|a| jac[a * m + i] * jac[a * m + j]).sum();
                    e[i][j] = s - gn.get(i, j);
                    e2 += e[i][j] * e[i][j];
                }
            }
            let gf = gn.frobenius();
            max_rel = max_rel.max(math::sqrt(e2) / gf);
            let w = self.weights[node] * self.inv_total;
            value += w * e2;
            if let Some(g) = grad.as_deref_mut() {
                // d/dJ |J^T J - G|^2 = 4 J E
                let mut dj = [0.0; 64 * MAX_DIM];
                for a in 0..n {
                    for k in 0..m {
                        dj[a * m + k] = 4.0 * w * (0..m).map(|l| jac[a * m + l] * e[l][k]).sum::<f64>();
                    }
                }
                for k in 0..m {
                    self.stencils.for_each(node, k, |nb, wt| {
                        let gp = &mut g[nb * n..nb * n + n];
                        for a in 0..n {
                            gp[a] += wt * dj[a * m + k];
                        }
                    });
                }
            }
        }
        Eval { value, max_rel }
    }
}

/// Linear coordinates in the first slots, a circle pair per periodic axis, and a
/// smooth seeded perturbation in every slot.
pub fn initial_embedding(grid: &ProductGrid, g: &SymTensorField, n: usize, seed: u64, perturbation: f64) -> Result<Vec<f64>> {
    let m = grid.dim();
    let needed: usize = grid.axes.iter().map(|a| if a.is_periodic() { 2 } else { 1 }).sum();
    if n < needed {
        return Err(Error::InvalidParameter("ambient dimension too small for the grid topology"));
    }
    let len = grid.len();
    let mean = |k: usize| g.values.iter().map(|v| v.get(k, k)).sum::<f64>() / len as f64;
    let scales: Vec<f64> = (0..m).map(|k| math::sqrt(mean(k))).collect();
    let spans: Vec<f64> = grid.axes.iter().map(|a| a.spacing() * if a.is_periodic() { a.len() } else { a.len() - 1 } as f64).collect();
    let extent = (0..m).map(|k| scales[k] * spans[k]).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // modes[a][k][q] = (amplitude, phase)
    let modes: Vec<Vec<[(f64, f64); 3]>> = (0..n)
        .map(|_| (0..m).map(|_| core::array::from_fn(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..math::TAU)))).collect())
        .collect();
    let amp = perturbation * extent / math::TAU;
    let mut x = vec![0.0; len * n];
    for flat in 0..len {
        let c = grid.coords(flat);
        let p = &mut x[flat * n..flat * n + n];
        let mut slot = 0;
        for k in 0..m {
            let axis = &grid.axes[k];
            if let Some(period) = axis.period() {
                let radius = scales[k] * period / math::TAU;
                let t = math::TAU * c[k] / period;
                p[slot] = radius * math::cos(t);
                p[slot + 1] = radius * math::sin(t);
                slot += 2;
            } else {
                p[slot] = scales[k] * c[k];
                slot += 1;
            }
        }
        for (a, pa) in p.iter_mut().enumerate() {
            for k in 0..m {
                let axis = &grid.axes[k];
                let omega = match axis.period() {
                    Some(period) => math::TAU / period,
                    None => math::PI / spans[k],
                };
                for (q, &(ampl, phase)) in modes[a][k].iter().enumerate() {
                    let qf = (q + 1) as f64;
                    *pa += amp * ampl / qf * math::sin(qf * omega * c[k] + phase);
                }
            }
        }
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS with backtracking (halving from step 1) on the weighted defect.
/// `init` overrides [`initial_embedding`] (node-major, `N` entries per node).
pub fn optimize_embedding(grid: &ProductGrid, g: &SymTensorField, cfg: &OptimizerConfig, init: Option<&[f64]>) -> Result<OptimizedEmbedding> {
    let m = grid.dim();
    let n = cfg.ambient_dim.unwrap_or_else(|| default_ambient_dim(m));
    if n < m || n > 64 {
        return Err(Error::InvalidParameter("ambient dimension must satisfy m <= N <= 64"));
    }
    if !(cfg.stop_residual > 0.0) {
        return Err(Error::InvalidParameter("stop residual must be positive"));
    }
    if g.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: g.len() });
    }
    for (flat, v) in g.values.iter().enumerate() {
        if v.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: v.dim() });
        }
        let lam = v.min_eigenvalue();
        if !(lam > 0.0) {
            return Err(Error::NotPositiveDefinite { node: grid.coords(flat), min_eigenvalue: lam });
        }
    }
    let weights = match &cfg.weights {
        Some(w) if w.len() != grid.len() => return Err(Error::GridMismatch { expected: grid.len(), found: w.len() }),
        Some(w) if w.iter().any(|v| !(*v > 0.0)) => return Err(Error::InvalidParameter("node weights must be positive")),
        Some(w) => w.clone(),
        None => g.values.iter().map(|v| 1.0 / (v.frobenius() * v.frobenius())).collect(),
    };
    let total: f64 = weights.iter().sum();
    let problem = Problem { stencils: Stencils::new(grid)?, g: &g.values, weights, inv_total: 1.0 / total, m, n };

    let mut x = match init {
        Some(p) if p.len() != grid.len() * n => return Err(Error::GridMismatch { expected: grid.len() * n, found: p.len() / n.max(1) }),
        Some(p) => p.to_vec(),
        None => initial_embedding(grid, g, n, cfg.seed, cfg.perturbation)?,
    };
    let dim = x.len();
    let mut grad = vec![0.0; dim];
    let mut cur = problem.eval(&x, Some(&mut grad));
    let mut trace = vec![TraceEntry { iter: 0, residual: cur.max_rel, step: 0.0 }];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut alpha = vec![0.0; cfg.memory];
    let mut converged = cur.max_rel <= cfg.stop_residual;
    let mut iter = 0;
    while !converged && iter < cfg.max_iters {
        iter += 1;
        // two-loop recursion
        dir.copy_from_slice(&grad);
        for (i, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[i] = rho * dot(s, &dir);
            for (d, yv) in dir.iter_mut().zip(y) {
                *d -= alpha[i] * yv;
            }
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => {
                let gn = math::sqrt(dot(&grad, &grad));
                let xn = math::sqrt(dot(&x, &x) / dim as f64);
                if gn > 0.0 {
                    1e-2 * xn.max(1.0) / gn
                } else {
                    1.0
                }
            }
        };
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for (i, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &dir);
            for (d, sv) in dir.iter_mut().zip(s) {
                *d += (alpha[i] - beta) * sv;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            history.clear();
            for (d, gv) in dir.iter_mut().zip(&grad) {
                *d = -gv;
            }
            slope = dot(&grad, &dir);
        }
        // backtracking from step 1
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            for ((t, xv), d) in trial.iter_mut().zip(&x).zip(&dir) {
                *t = xv + step * d;
            }
            let e = problem.eval(&trial, Some(&mut trial_grad));
            if e.value <= cur.value + cfg.armijo * step * slope {
                accepted = Some(e);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * math::sqrt(dot(&s, &s) * dot(&y, &y)) {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            if cfg.memory > 0 {
                history.push_back((s, y, 1.0 / sy));
            }
        }
        core::mem::swap(&mut x, &mut trial);
        core::mem::swap(&mut grad, &mut trial_grad);
        cur = next;
        trace.push(TraceEntry { iter, residual: cur.max_rel, step });
        converged = cur.max_rel <= cfg.stop_residual;
    }
    let jacobians = problem.stencils.jacobians(&x, n);
    let embedding = EuclideanEmbedding {
        grid: grid.clone(),
        n,
        points: x,
        jacobians,
        provenance: Provenance::Optimized { config: cfg.clone(), final_residual: cur.max_rel },
    };
    Ok(OptimizedEmbedding { embedding, trace, converged, final_residual: cur.max_rel, objective: cur.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::analytic::{analytic_embedding, AnalyticSurface};
    use crate::field::Frame;
    use crate::grid::Axis;

    #[test]
    fn euclidean_patch_is_already_optimal() {
        let grid = ProductGrid::new(vec![Axis::closed(10, 0.0, 1.0), Axis::closed(12, -1.0, 1.0)]);
        let g = SymTensorField::new(Frame::Coordinate, vec![SymMat::identity(2); grid.len()]);
        let cfg = OptimizerConfig { ambient_dim: Some(2), perturbation: 0.0, ..Default::default() };
        let out = optimize_embedding(&grid, &g, &cfg, None).unwrap();
        assert!(out.converged && out.final_residual < 1e-8);
    }

    #[test]
    fn flat_cylinder_matches_the_analytic_map() {
        let grid = ProductGrid::new(vec![Axis::closed(10, 0.0, 1.0), Axis::periodic(24, math::TAU)]);
        let surface = AnalyticSurface::FlatCylinder { a: 1.0, b: 2.0 };
        let g = surface.metric(&grid).unwrap();
        let cfg = OptimizerConfig { ambient_dim: Some(3), stop_residual: 1e-7, ..Default::default() };
        let out = optimize_embedding(&grid, &g, &cfg, None).unwrap();
        assert!(out.converged, "{}", out.final_residual);
        let exact = analytic_embedding(&surface, &grid).unwrap();
        for (j, e) in out.embedding.jacobians.iter().zip(&exact.jacobians) {
            assert!(j.gram().sub(&e.gram()).frobenius() < 1e-6);
        }
    }

    #[test]
    fn rejects_indefinite_metrics() {
        let grid = ProductGrid::new(vec![Axis::closed(8, 0.0, 1.0), Axis::periodic(8, 1.0)]);
        let mut vals = vec![SymMat::identity(2); grid.len()];
        vals[5] = SymMat::diag(&[1.0, -1.0]);
        let g = SymTensorField::new(Frame::Coordinate, vals);
        assert!(matches!(optimize_embedding(&grid, &g, &OptimizerConfig::default(), None), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn weight_scaling_and_reruns_are_bit_identical() {
        let grid = ProductGrid::new(vec![Axis::closed(8, 0.0, 1.0), Axis::periodic(16, math::TAU)]);
        let parse = |s: &str| crate::expr::Expr::parse(s, &["t"]).unwrap();
        let surface = AnalyticSurface::Revolution { a: parse("1.5"), b: parse("1 + 0.5*t") };
        let g = surface.metric(&grid).unwrap();
        let w: Vec<f64> = g.values.iter().map(|v| 1.0 / v.trace()).collect();
        let cfg = OptimizerConfig { ambient_dim: Some(5), max_iters: 200, stop_residual: 1e-12, weights: Some(w.clone()), seed: 7, ..Default::default() };
        let a = optimize_embedding(&grid, &g, &cfg, None).unwrap();
        let b = optimize_embedding(&grid, &g, &cfg, None).unwrap();
        assert_eq!(a.embedding.points, b.embedding.points);
        assert_eq!(a.trace, b.trace);
        let scaled = OptimizerConfig { weights: Some(w.iter().map(|v| v * 4.0).collect()), ..cfg };
        let c = optimize_embedding(&grid, &g, &scaled, None).unwrap();
        assert!((a.final_residual - c.final_residual).abs() <= 1e-10);
    }
}
