//! Simulation of the regularized Dirac-geodesic gradient flow of closed
//! curves `γ: S¹ → N` coupled to twisted spinors along them.
//!
//! Targets are compact manifolds with explicit isometric embeddings
//! `N ⊂ ℝ^q`; fields are sampled on a uniform grid and differentiated
//! spectrally.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod energy;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod io;
pub mod manifold;
pub mod oracle;
pub mod spectral;
pub mod spinor;

pub use energy::{el_residual, energies, l2_gradient, tension_field, EnergyReport, Residual, StateDirection};
pub use error::{Error, Result};
pub use fixtures::{InitialData, RandomSpec};
pub use flow::{
    detect_stationary, epsilon_sweep, evolve, speed_spread, step, subconvergence_extract, DiagnosticsRecord, FlowError,
    FlowOutcome, FlowParams, FlowState, Integrator, StationarityReport, SweepEntry,
};
pub use manifold::{catalog, CatalogParams, Manifold};
pub use spectral::{CircleGrid, ModeVector, SpinStructure};
pub use spinor::{CurveField, SpinorField, VectorField};
