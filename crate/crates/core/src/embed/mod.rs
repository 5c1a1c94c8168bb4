//! Isometric embeddings of the adjusted compactified metric into `R^N`.

mod analytic;
mod diagnostics;
mod optimize;
pub mod stencil;

use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::ProductGrid;
use crate::linalg::Matrix;

pub use analytic::{analytic_embedding, AnalyticSurface};
pub use diagnostics::{embedding_diagnostics, EmbeddingDiagnostics, INJECTIVITY_SOURCES};
pub use optimize::{default_ambient_dim, initial_embedding, optimize_embedding, OptimizedEmbedding, OptimizerConfig, TraceEntry};

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Analytic(String),
    Optimized { config: OptimizerConfig, final_residual: f64 },
}

/// A map from grid nodes to `R^n` with an `n x m` Jacobian per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanEmbedding {
    pub grid: ProductGrid,
    pub n: usize,
    /// Node-major, `n` entries per node.
    pub points: Vec<f64>,
    pub jacobians: Vec<Matrix>,
    pub provenance: Provenance,
}

impl EuclideanEmbedding {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> &[f64] {
        &self.points[flat * self.n..(flat + 1) * self.n]
    }
}
