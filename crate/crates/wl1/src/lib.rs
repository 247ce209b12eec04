//! Sparse signal recovery by weighted l1 minimization with partial prior
//! support information.
//!
//! The crate solves the two constrained programs
//!
//! ```text
//! minimize ‖x‖₁,w   subject to   ‖y − Ax‖₂ ≤ ε        (l2 ball)
//! minimize ‖x‖₁,w   subject to   ‖Aᵀ(y − Ax)‖_∞ ≤ ε   (Dantzig selector)
//! ```
//!
//! with weights `w_i = ω` on a support estimate T̃ and 1 elsewhere, and
//! provides the full calculus of recovery guarantees around them:
//!
//! * [`model`] — signals, support estimates, weights, problem instances;
//! * [`bounds`] — RIC thresholds `δ_t^ω`, stability constants `D₀/D₁/D'₀/D'₁`
//!   and the comparison constants, plus figure sweeps;
//! * [`solver`] — certified conic solves of both programs;
//! * [`rip`] — exact restricted isometry constants at small scale, Monte
//!   Carlo lower bounds, and recovery certification;
//! * [`analysis`] — sparse polytope decomposition and the shifted power
//!   inequality;
//! * [`sharpness`] — the counterexample showing the recovery condition is
//!   sharp;
//! * [`harness`] — reproducible experiments and figure-data emission.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod model;
pub mod rip;
pub mod sharpness;
pub mod solver;

pub use error::{Error, Result};
