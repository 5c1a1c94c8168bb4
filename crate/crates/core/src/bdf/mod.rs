//! Construction of a boundary defining function `x` with `x^2 g - dx^2`
//! positive-definite, when `kappa_inf < -1` on the whole boundary.
//!
//! Steps: collar normal form ([`flow_collar`]), collar depth ([`choose_epsilon`]),
//! cutoff ([`make_cutoff`]), profile ([`compute_phi`], [`assemble_bdf`]) and the
//! adjusted tensor ([`assemble_g`]).

mod adjusted;
mod cutoff;
mod flow;
mod profile;

pub use adjusted::{assemble_g, AdjustedTensorG, CONSISTENCY_TOL};
pub use cutoff::{make_cutoff, Cutoff, CutoffKind};
pub use flow::{choose_epsilon, compute_k2, flow_collar, FlowOptions, NormalFormData};
pub use profile::{assemble_bdf, compute_phi, BdfProfile, ProfileBdf, IDENTITY_TOL, PHI_TOL};
