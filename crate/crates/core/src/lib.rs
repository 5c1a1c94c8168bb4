//! Numerical construction of isometric interior p-embeddings of conformally
//! compact manifolds into hyperbolic half-space.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; file formats, configuration and the command line live in the
//! `ccembed` companion crate.
#![no_std]

extern crate alloc;

pub mod bdf;
pub mod builtins;
pub mod compose;
pub mod curvature;
pub mod embed;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod manifold;
mod math;
pub mod metric;
mod ode;
pub mod quad;

pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{Frame, FrameTensor, SymTensorField, ZeroOneForm};
pub use grid::{Axis, CollarGrid, ProductGrid};
pub use linalg::{pullback, Matrix, SymMat};
pub use manifold::{BoundaryEnds, BoundaryGrid, BoundaryNode, ModelKind, ModelManifold};
pub use metric::{MetricSpec, ScalarField, SmoothFunction};
