//! Numerical laboratory for second-order evolution equations
//! `u'' + ∇F(u) + g(t, u') = 0` with a superlinear restoring force
//! (`∇F ~ |u|^{β+1}`) and superlinear damping (`g ~ |u'|^{α+1}`).
//!
//! In the regime `0 < α < β` the energy of every solution obeys a
//! *universal* ceiling `E₀(t) ≤ Γ t^{−1/γ} + Γ*` for positive times and a
//! *universal* decay envelope `E₀(t) ≤ D t^{−r}` at infinity, with
//! constants independent of the initial data. This crate builds concrete
//! finite-dimensional realizations (scalar models, Galerkin-truncated
//! wave/plate equations, Kirchhoff modal systems), integrates them with an
//! energy-certified adaptive stepper, and checks the certificates behind
//! those claims: assumption inequalities, energy equivalence sandwiches,
//! differential inequalities, comparison majorants, and fitted bound/decay
//! constants.
//!
//! Modules:
//! - [`models`] — system builders and norm realizations;
//! - [`integrator`] — adaptive embedded pair with an energy-identity gate;
//! - [`certificates`] — exponents, energies, inequality verification, fits;
//! - [`harness`] — experiment orchestration, sweeps, persistence, plots.

// Validation uses `!(x > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod models;

pub use error::{Error, Result};
pub use integrator::{Tolerances, Trajectory};
pub use models::{AssumptionConstants, Boundary, EvolutionSystem, NormSet, PdeParams, State};
