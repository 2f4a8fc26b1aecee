//! Solvers for discrete mean field games on the periodic torus.
//!
//! The discrete system couples a Hamilton–Jacobi–Bellman equation for the
//! value function with a Fokker–Planck equation for the population density
//! through a local coupling cost. Space is a uniform periodic grid in one
//! or two dimensions; gradients are two-sided and clipped Engquist–Osher
//! style, which makes the transport matrix an M-matrix and its transpose
//! the exact adjoint of the linearized Hamiltonian.
//!
//! Two problem classes are covered:
//!
//! * [`stationary`]: the ergodic system for `(U, M, Λ)`, solved either by
//!   policy iteration ([`stationary::policy_iteration_stationary`]) or by a
//!   direct least-squares Newton method ([`newton::newton_solve`]).
//! * [`evolutive`]: the finite-horizon system on an implicit Euler time
//!   grid, solved by forward–backward policy iteration
//!   ([`evolutive::policy_iteration_evolutive`]).
//!
//! Everything is generic over the scalar type through [`scalar::Real`]
//! (implemented for `f32` and `f64`); the `*64` aliases below fix the
//! common `f64` instantiation.

pub mod convergence;
pub mod coupling;
pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod newton;
pub mod operators;
pub mod scalar;
pub mod stationary;

pub mod evolutive;

pub use convergence::{ConvergenceLog, LogRecord};
pub use coupling::Coupling;
pub use error::SolverError;
pub use field::{
    discrete_l2_distance, quadrature, PolicyField, ScalarField, TwoSidedField, TwoSidedGradient,
};
pub use grid::{wrap_index, PeriodicGrid, TimeGrid};
pub use linalg::{LinAlgError, SparseMatrix};
pub use scalar::Real;

/// `f64` scalar field.
pub type ScalarField64 = field::ScalarField<f64>;
/// `f64` two-sided policy field.
pub type PolicyField64 = field::PolicyField<f64>;
/// `f64` two-sided gradient field.
pub type TwoSidedGradient64 = field::TwoSidedGradient<f64>;
/// `f64` sparse matrix.
pub type SparseMatrix64 = linalg::SparseMatrix<f64>;
/// `f64` time grid.
pub type TimeGrid64 = grid::TimeGrid<f64>;
/// `f64` coupling cost.
pub type Coupling64 = coupling::Coupling<f64>;
/// `f64` stationary problem data.
pub type StationaryProblem64 = stationary::StationaryProblem<f64>;
/// `f64` stationary solution triple.
pub type StationaryState64 = stationary::StationaryState<f64>;
/// `f64` policy-iteration options.
pub type PiConfig64 = stationary::PiConfig<f64>;
/// `f64` Newton options.
pub type NewtonConfig64 = newton::NewtonConfig<f64>;
/// `f64` finite-horizon problem data.
pub type EvolutiveProblem64 = evolutive::EvolutiveProblem<f64>;
/// `f64` finite-horizon solution.
pub type EvolutiveState64 = evolutive::EvolutiveState<f64>;
