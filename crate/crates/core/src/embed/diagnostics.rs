//! Isometry, immersion and injectivity diagnostics for an embedding.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::EuclideanEmbedding;
use crate::error::{Error, Result};
use crate::field::SymTensorField;
use crate::grid::ProductGrid;
use crate::linalg::SymMat;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDiagnostics {
    /// `|J^T J - G|_F / |G|_F` per node.
    pub node_defects: Vec<f64>,
    pub max_rel_defect: f64,
    pub rms_rel_defect: f64,
    pub min_singular_value: f64,
    /// Smallest extrinsic / intrinsic distance ratio over sampled node pairs.
    pub injectivity_ratio: f64,
}

impl EmbeddingDiagnostics {
    pub fn is_immersion(&self, tol: f64) -> bool {
        self.min_singular_value > tol
    }

    pub fn is_injective(&self, tol: f64) -> bool {
        self.injectivity_ratio > tol
    }
}

/// Number of Dijkstra sources used for the injectivity proxy.
pub const INJECTIVITY_SOURCES: usize = 24;

pub fn embedding_diagnostics(v: &EuclideanEmbedding, g: &SymTensorField) -> Result<EmbeddingDiagnostics> {
    let len = v.grid.len();
    if g.len() != len || v.jacobians.len() != len {
        return Err(Error::GridMismatch { expected: len, found: g.len().min(v.jacobians.len()) });
    }
    let node_defects: Vec<f64> = v.jacobians.iter().zip(&g.values).map(|(j, gm)| j.gram().sub(gm).frobenius() / gm.frobenius()).collect();
    let max_rel_defect = node_defects.iter().copied().fold(0.0, f64::max);
    let rms_rel_defect = math::sqrt(node_defects.iter().map(|d| d * d).sum::<f64>() / len as f64);
    let min_singular_value = v.jacobians.iter().map(|j| j.min_singular_value()).fold(f64::INFINITY, f64::min);
    let injectivity_ratio = injectivity_proxy(v, &g.values, INJECTIVITY_SOURCES);
    Ok(EmbeddingDiagnostics { node_defects, max_rel_defect, rms_rel_defect, min_singular_value, injectivity_ratio })
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // min-heap on distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Neighbours of `flat` in the king-move graph (with periodic wrap), together
/// with the coordinate displacement.
fn neighbours(grid: &ProductGrid, flat: usize, out: &mut Vec<(usize, [f64; 3])>) {
    out.clear();
    let m = grid.dim();
    let idx = grid.multi_index(flat);
    let strides = grid.strides();
    let count = 3usize.pow(m as u32);
    'offsets: for code in 0..count {
        let mut c = code;
        let mut target = 0usize;
        let mut delta = [0.0; 3];
        let mut zero = true;
        for k in 0..m {
            let o = (c % 3) as isize - 1;
            c /= 3;
            let axis = &grid.axes[k];
            let n = axis.len() as isize;
            let mut j = idx[k] as isize + o;
            if axis.is_periodic() {
                j = j.rem_euclid(n);
            } else if j < 0 || j >= n {
                continue 'offsets;
            }
            if o != 0 {
                zero = false;
            }
            delta[k] = o as f64 * axis.spacing();
            target += j as usize * strides[k];
        }
        if !zero {
            out.push((target, delta));
        }
    }
}

fn injectivity_proxy(v: &EuclideanEmbedding, g: &[SymMat], sources: usize) -> f64 {
    let len = v.grid.len();
    let step = (len / sources.max(1)).max(1);
    let mut best = f64::INFINITY;
    let mut dist = vec![f64::INFINITY; len];
    let mut nb = Vec::new();
    for src in (0..len).step_by(step).take(sources) {
        dist.fill(f64::INFINITY);
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, src));
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            neighbours(&v.grid, u, &mut nb);
            for &(w, delta) in &nb {
                let avg = g[u].add(&g[w]).scale(0.5);
                let len_e = math::sqrt(avg.bilinear(&delta, &delta).max(0.0));
                if d + len_e < dist[w] {
                    dist[w] = d + len_e;
                    heap.push(Item(dist[w], w));
                }
            }
        }
        let ps = v.point(src);
        for (t, &di) in dist.iter().enumerate() {
            if t == src || !(di > 0.0) {
                continue;
            }
            let pt = v.point(t);
            let ext = math::sqrt(ps.iter().zip(pt).map(|(a, b)| (a - b) * (a - b)).sum());
            best = best.min(ext / di);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::analytic::{analytic_embedding, AnalyticSurface};
    use crate::embed::Provenance;
    use crate::grid::Axis;
    use crate::linalg::Matrix;
    use alloc::string::String;

    fn cylinder() -> (EuclideanEmbedding, SymTensorField) {
        let grid = ProductGrid::new(vec![Axis::closed(9, 0.0, 1.0), Axis::periodic(24, math::TAU)]);
        let s = AnalyticSurface::FlatCylinder { a: 0.7, b: 1.3 };
        (analytic_embedding(&s, &grid).unwrap(), s.metric(&grid).unwrap())
    }

    #[test]
    fn analytic_cylinder_diagnostics() {
        let (e, g) = cylinder();
        let d = embedding_diagnostics(&e, &g).unwrap();
        assert!(d.max_rel_defect < 1e-9);
        assert!((d.min_singular_value - 0.7).abs() < 1e-12);
        assert!(d.injectivity_ratio > 0.5 && d.injectivity_ratio <= 1.0 + 1e-12, "{}", d.injectivity_ratio);
        assert!(d.is_immersion(1e-3) && d.is_injective(0.1));
    }

    #[test]
    fn collapsed_map_is_flagged() {
        let (e, g) = cylinder();
        let len = e.grid.len();
        let flat = EuclideanEmbedding {
            grid: e.grid.clone(),
            n: 3,
            points: vec![1.0; 3 * len],
            jacobians: vec![Matrix::zeros(3, 2); len],
            provenance: Provenance::Analytic(String::from("constant")),
        };
        let d = embedding_diagnostics(&flat, &g).unwrap();
        assert_eq!(d.min_singular_value, 0.0);
        assert_eq!(d.injectivity_ratio, 0.0);
        assert!(!d.is_immersion(1e-3) && !d.is_injective(0.1));
    }

    #[test]
    fn coincident_nodes_give_zero_ratio() {
        let (mut e, g) = cylinder();
        let far = e.grid.len() - 1;
        let p0 = e.point(0).to_vec();
        e.points[far * 3..far * 3 + 3].copy_from_slice(&p0);
        let d = embedding_diagnostics(&e, &g).unwrap();
        assert_eq!(d.injectivity_ratio, 0.0);
    }
}
