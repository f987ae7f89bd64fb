//! Copula-assisted two-stage false discovery rate control.
//!
//! A primary p-value `p2` (from an effect estimate) and an auxiliary p-value
//! `p1` (from a covariate that is informative but independent of the effect
//! under the null) are combined through a bivariate copula into one p-value
//! that is uniform under the null, then thresholded with Storey's procedure.
//!
//! The copula and special-function layers are generic over [`Real`]
//! (`f32` or `f64`). Fitting, procedures and simulation work in `f64`.

pub mod copula;
pub mod error;
pub mod fit;
pub mod ingest;
pub mod marginal;
pub mod optim;
pub mod procedure;
pub mod real;
pub mod simulate;
pub mod special;

pub use copula::{tau_to_theta, CopulaModel, Family, PseudoObservations, Rotation};
pub use error::{Error, Result};
pub use marginal::{HypothesisTable, NullMixture};
pub use procedure::{Method, ProcedureOutcome};
pub use real::Real;

/// Double-precision copula model.
pub type CopulaF64 = CopulaModel<f64>;
/// Single-precision copula model.
pub type CopulaF32 = CopulaModel<f32>;
/// Double-precision pseudo-observations.
pub type PseudoObservationsF64 = PseudoObservations<f64>;
