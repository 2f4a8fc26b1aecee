//! Command-line runner for the mean field game solvers.
//!
//! The library side of the `mfg` binary: [`config`] resolves flags, config
//! files, and defaults into a validated [`config::RunConfig`]; [`builtins`]
//! samples the named potentials, couplings, and initial data; [`runner`]
//! executes the selected solver; [`output`] persists the solution fields,
//! convergence log, and summary as CSV.

pub mod builtins;
pub mod config;
pub mod output;
pub mod runner;
