//! Experiment orchestration: builds the configured problem, dispatches to
//! the selected solver, and writes every output file.
//!
//! Outputs in the configured directory:
//!
//! * stationary — `u.csv`, `m.csv` (`index,x1[,x2],value`);
//! * evolutive — `u_nnn.csv`, `m_nnn.csv`, `q_nnn.csv` per time node, the
//!   policy merged to one column per axis;
//! * both — `convergence.csv` (`iteration,metric,wall_time_seconds`) and a
//!   one-row `summary.csv`.
//!
//! When the iteration limit stops a run, the last iterate is still written
//! before the error is returned.

use std::io;

use mfg_core::evolutive::{merge_policy_for_output, policy_iteration_evolutive};
use mfg_core::newton::{newton_solve, NewtonConfig};
use mfg_core::stationary::policy_iteration_stationary;
use mfg_core::{
    ConvergenceLog, Coupling64, EvolutiveProblem64, EvolutiveState64, LinAlgError, PeriodicGrid,
    PiConfig64, PolicyField64, ScalarField64, SolverError, StationaryProblem64, StationaryState64,
    TimeGrid64,
};

use crate::builtins;
use crate::config::{ConfigError, Method, ProblemKind, RunConfig};
use crate::output::{self, Summary};

/// Failure of a run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The iteration limit stopped the solve; the last iterate was written.
    #[error(
        "stopped at the iteration limit after {iterations} outer iterations \
         (metric {final_metric:.3e}); last iterate written"
    )]
    MaxIterations {
        iterations: usize,
        final_metric: f64,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write outputs: {0}")]
    Io(#[from] io::Error),
    #[error("linear algebra failure: {0}")]
    Solver(#[from] LinAlgError),
}

impl RunError {
    /// Process exit code: 2 iteration limit, 3 configuration or I/O error,
    /// 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::MaxIterations { .. } => 2,
            RunError::Config(_) | RunError::Io(_) => 3,
            RunError::Solver(_) => 4,
        }
    }
}

/// What a converged run reports.
#[derive(Clone, Copy, Debug)]
pub struct RunOutcome {
    pub iterations: usize,
    pub final_metric: f64,
}

/// Runs one configured experiment and writes its outputs.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(&config.out)?;
    let grid = PeriodicGrid::new(config.dim, config.nodes);
    let potential = builtins::builtin_potential(&config.potential, grid)?;
    let coupling = builtins::builtin_coupling(&config.coupling)?;
    match config.problem {
        ProblemKind::Stationary => run_stationary(config, grid, potential, coupling),
        ProblemKind::Evolutive => run_evolutive(config, grid, potential, coupling),
    }
}

fn pi_config(config: &RunConfig) -> PiConfig64 {
    PiConfig64 {
        tol: config.tol,
        mu: config.mu,
        inner_steps: config.inner_steps,
        max_outer: config.max_outer,
        warm_start_fp: true,
    }
}

/// Splits a solver result into the state to persist and whether it
/// converged; linear-algebra failures abort without outputs.
fn persistable<S>(
    solved: Result<(S, ConvergenceLog), SolverError<S>>,
) -> Result<(S, ConvergenceLog, bool), RunError> {
    match solved {
        Ok((state, log)) => Ok((state, log, true)),
        Err(SolverError::MaxIterations { state, log }) => Ok((*state, log, false)),
        Err(SolverError::LinAlg(e)) => Err(RunError::Solver(e)),
    }
}

fn finish(log: &ConvergenceLog, converged: bool) -> Result<RunOutcome, RunError> {
    let iterations = log.len();
    let final_metric = log.final_metric().unwrap_or(f64::NAN);
    if converged {
        Ok(RunOutcome {
            iterations,
            final_metric,
        })
    } else {
        Err(RunError::MaxIterations {
            iterations,
            final_metric,
        })
    }
}

fn summary(config: &RunConfig, log: &ConvergenceLog, lambda: Option<f64>) -> Summary {
    let iterations = log.len();
    let total_cpu = log.total_wall_time().unwrap_or(0.0);
    Summary {
        method: config.method.name(),
        nodes: config.nodes,
        iterations,
        avg_cpu_per_iter: if iterations == 0 {
            0.0
        } else {
            total_cpu / iterations as f64
        },
        total_cpu,
        final_metric: log.final_metric().unwrap_or(f64::NAN),
        lambda,
    }
}

fn run_stationary(
    config: &RunConfig,
    grid: PeriodicGrid,
    potential: ScalarField64,
    coupling: Coupling64,
) -> Result<RunOutcome, RunError> {
    let problem =
        StationaryProblem64::new(grid, config.eps, potential, coupling).with_cap(config.cap);
    let solved = match config.method {
        Method::Pi => {
            let q0 = PolicyField64::zeros(grid);
            policy_iteration_stationary(&problem, &q0, &pi_config(config))
        }
        Method::Newton => {
            let newton = NewtonConfig {
                tol: config.tol,
                max_outer: config.max_outer,
                initial: None,
            };
            newton_solve(&problem, &newton)
        }
    };
    let (state, log, converged) = persistable(solved)?;
    write_stationary_outputs(config, &state, &log)?;
    finish(&log, converged)
}

fn write_stationary_outputs(
    config: &RunConfig,
    state: &StationaryState64,
    log: &ConvergenceLog,
) -> io::Result<()> {
    let dir = &config.out;
    output::write_scalar_field(&dir.join("u.csv"), &state.u)?;
    output::write_scalar_field(&dir.join("m.csv"), &state.m)?;
    output::write_convergence(&dir.join("convergence.csv"), log)?;
    output::write_summary(
        &dir.join("summary.csv"),
        &summary(config, log, Some(state.lambda)),
    )
}

fn run_evolutive(
    config: &RunConfig,
    grid: PeriodicGrid,
    potential: ScalarField64,
    coupling: Coupling64,
) -> Result<RunOutcome, RunError> {
    let (m0, u_t) = builtins::builtin_initial_data(&config.initial_data, grid)?;
    let time = TimeGrid64::new(config.horizon, config.time_steps);
    let problem = EvolutiveProblem64::new(grid, time, config.eps, potential, coupling, m0, u_t)
        .with_cap(config.cap);
    let q0 = problem.zero_policies();
    let solved =
        policy_iteration_evolutive(&problem, &q0, &pi_config(config), config.rhs_policy.into());
    let (state, log, converged) = persistable(solved)?;
    write_evolutive_outputs(config, &state, &log)?;
    finish(&log, converged)
}

fn write_evolutive_outputs(
    config: &RunConfig,
    state: &EvolutiveState64,
    log: &ConvergenceLog,
) -> io::Result<()> {
    let dir = &config.out;
    for (n, slice) in state.m.iter().enumerate() {
        output::write_scalar_field(&dir.join(format!("m_{n:03}.csv")), slice)?;
    }
    for (n, slice) in state.u.iter().enumerate() {
        output::write_scalar_field(&dir.join(format!("u_{n:03}.csv")), slice)?;
    }
    for (n, q) in state.q.iter().enumerate() {
        let merged = merge_policy_for_output(q);
        output::write_merged_policy(&dir.join(format!("q_{n:03}.csv")), &merged)?;
    }
    output::write_convergence(&dir.join("convergence.csv"), log)?;
    output::write_summary(&dir.join("summary.csv"), &summary(config, log, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        let max = RunError::MaxIterations {
            iterations: 7,
            final_metric: 1e-3,
        };
        assert_eq!(max.exit_code(), 2);
        let config = RunError::Config(ConfigError::Invalid("bad".into()));
        assert_eq!(config.exit_code(), 3);
        let io_err = RunError::Io(io::Error::new(io::ErrorKind::PermissionDenied, "denied"));
        assert_eq!(io_err.exit_code(), 3);
        let solver = RunError::Solver(LinAlgError::SingularSystem);
        assert_eq!(solver.exit_code(), 4);
    }
}
