//! Direct least-squares Newton solver for the stationary system.
//!
//! The residual of [`crate::stationary::stationary_residual`] stacks
//! `2|G| + 2` equations in the `2|G| + 1` unknowns `(U, M, Λ)`. Each Newton
//! step solves the full-rank least-squares problem `J w = −r` for the exact
//! Jacobian `J` and applies the increment without damping.

use crate::convergence::{ConvergenceLog, Stopwatch};
use crate::error::SolverError;
use crate::field::ScalarField;
use crate::grid::PeriodicGrid;
use crate::linalg::{residual_norm2, solve_least_squares, SparseMatrix};
use crate::operators::{
    assemble_divergence_jacobian, assemble_fp_matrix, assemble_hjb_advection_matrix,
    two_sided_gradient,
};
use crate::scalar::{real, Real};
use crate::stationary::{stationary_residual, StationaryProblem, StationaryState};

/// Options of the Newton solver.
#[derive(Clone, Debug)]
pub struct NewtonConfig<T> {
    /// Stopping tolerance on the residual 2-norm.
    pub tol: T,
    /// Maximum number of Newton steps.
    pub max_outer: usize,
    /// Initial iterate; `None` uses `U ≡ 0`, `M ≡ 1`, `Λ = 0`.
    pub initial: Option<StationaryState<T>>,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            tol: real(1e-8),
            max_outer: 100,
            initial: None,
        }
    }
}

/// Flat initial iterate `U ≡ 0`, `M ≡ 1`, `Λ = 0`.
pub fn flat_initial_state<T: Real>(grid: PeriodicGrid) -> StationaryState<T> {
    StationaryState {
        u: ScalarField::zeros(grid),
        m: ScalarField::constant(grid, T::one()),
        lambda: T::zero(),
    }
}

/// Exact Jacobian of the stationary residual at `state`, of shape
/// `(2|G| + 2) × (2|G| + 1)` with column blocks `(U, M, Λ)`:
///
/// ```text
/// [ Aᵀ(D♯U)         −diag(F′(M))   1  ]   HJB rows
/// [ ∂_U(A(D♯U)M)     A(D♯U)        0  ]   FP rows
/// [ h^d·1ᵀ           0             0  ]   ∫♯U row
/// [ 0                h^d·1ᵀ        0  ]   ∫♯M − 1 row
/// ```
///
/// At Engquist–Osher kinks the clipped branch (zero weight) is chosen, the
/// same convention as the assemblies it is built from.
pub fn assemble_jacobian<T: Real>(
    state: &StationaryState<T>,
    problem: &StationaryProblem<T>,
) -> SparseMatrix<T> {
    let grid = problem.grid;
    assert_eq!(state.u.grid(), grid, "state lives on another grid");
    let n = grid.total_nodes();
    let grad = two_sided_gradient(&state.u);
    let advection = assemble_hjb_advection_matrix(&grad, problem.eps)
        .expect("finite state yields a finite advection matrix");
    let transport = assemble_fp_matrix(&grad, problem.eps)
        .expect("finite state yields a finite transport matrix");
    let drift = assemble_divergence_jacobian(&state.m, &grad);
    let volume: T = grid.cell_volume();

    let mut triplets: Vec<(usize, usize, T)> = Vec::with_capacity(
        advection.nnz() + transport.nnz() + drift.nnz() + 4 * n,
    );
    triplets.extend(advection.entries());
    for i in 0..n {
        triplets.push((i, n + i, -problem.coupling.derivative(state.m.get(i))));
        triplets.push((i, 2 * n, T::one()));
    }
    triplets.extend(drift.entries().map(|(r, c, v)| (n + r, c, v)));
    triplets.extend(transport.entries().map(|(r, c, v)| (n + r, n + c, v)));
    for j in 0..n {
        triplets.push((2 * n, j, volume));
        triplets.push((2 * n + 1, n + j, volume));
    }
    SparseMatrix::from_triplets(2 * n + 2, 2 * n + 1, triplets)
        .expect("jacobian triplets are finite and in range")
}

/// Newton iteration on the stationary residual with least-squares steps.
///
/// Stops when the residual 2-norm falls below `cfg.tol`; the iteration
/// count reported by the log is the number of Newton steps taken.
pub fn newton_solve<T: Real>(
    problem: &StationaryProblem<T>,
    cfg: &NewtonConfig<T>,
) -> Result<(StationaryState<T>, ConvergenceLog), SolverError<StationaryState<T>>> {
    let grid = problem.grid;
    let n = grid.total_nodes();
    let mut state = cfg
        .initial
        .clone()
        .unwrap_or_else(|| flat_initial_state(grid));
    assert_eq!(state.u.grid(), grid, "initial state lives on another grid");

    let watch = Stopwatch::start();
    let mut log = ConvergenceLog::new();
    let mut residual = stationary_residual(&state, problem);
    let mut metric = residual_norm2(&residual);
    if metric < cfg.tol {
        return Ok((state, log));
    }

    for k in 1..=cfg.max_outer {
        let jacobian = assemble_jacobian(&state, problem);
        let negated: Vec<T> = residual.iter().map(|&v| -v).collect();
        let step = solve_least_squares(&jacobian, &negated).map_err(SolverError::from)?;

        for i in 0..n {
            let u = state.u.get(i) + step[i];
            state.u.set(i, u);
            let m = state.m.get(i) + step[n + i];
            state.m.set(i, m);
        }
        state.lambda += step[2 * n];

        residual = stationary_residual(&state, problem);
        metric = residual_norm2(&residual);
        log.push(k, metric.to_f64().unwrap_or(f64::NAN), watch.elapsed_seconds());
        if metric < cfg.tol {
            return Ok((state, log));
        }
    }
    Err(SolverError::MaxIterations {
        state: Box::new(state),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::Coupling;
    use crate::field::PolicyField;
    use crate::stationary::{policy_iteration_stationary, PiConfig};

    fn reference_problem_1d(nodes: usize) -> StationaryProblem<f64> {
        let grid = PeriodicGrid::line(nodes);
        let two_pi = 2.0 * std::f64::consts::PI;
        let potential =
            ScalarField::from_fn(grid, |x: [f64; 2]| (two_pi * x[0]).sin() + (2.0 * two_pi * x[0]).cos());
        StationaryProblem::new(grid, 0.3, potential, Coupling::quadratic())
    }

    #[test]
    fn jacobian_blocks_at_flat_state() {
        let grid = PeriodicGrid::line(6);
        let problem: StationaryProblem<f64> =
            StationaryProblem::new(grid, 0.3, ScalarField::zeros(grid), Coupling::quadratic());
        let state = flat_initial_state::<f64>(grid);
        let j = assemble_jacobian(&state, &problem);
        let n = 6;
        assert_eq!((j.nrows(), j.ncols()), (2 * n + 2, 2 * n + 1));
        // Coupling block: −F′(1) = −2 on the diagonal.
        for i in 0..n {
            assert_eq!(j.get(i, n + i), -2.0);
            assert_eq!(j.get(i, 2 * n), 1.0);
            assert_eq!(j.get(2 * n, i), 1.0 / 6.0);
            assert_eq!(j.get(2 * n + 1, n + i), 1.0 / 6.0);
        }
        // Zero gradient: the drift block vanishes entirely.
        for i in 0..n {
            for c in 0..n {
                assert_eq!(j.get(n + i, c), 0.0);
            }
        }
    }

    #[test]
    fn jacobian_diffusion_blocks_are_transposes() {
        let grid = PeriodicGrid::line(7);
        let problem = reference_problem_1d(7);
        let u = ScalarField::from_fn(grid, |x: [f64; 2]| (5.0 * x[0]).sin() + 0.4 * x[0] * x[0]);
        let m = ScalarField::from_fn(grid, |x: [f64; 2]| 1.0 + 0.5 * (3.0 * x[0]).cos());
        let state = StationaryState { u, m, lambda: 0.7 };
        let j = assemble_jacobian(&state, &problem);
        let n = 7;
        for r in 0..n {
            for c in 0..n {
                assert_eq!(j.get(r, c), j.get(n + c, n + r), "blocks not transposed at ({r},{c})");
            }
        }
    }

    #[test]
    fn trivial_problem_needs_one_step() {
        let grid = PeriodicGrid::line(16);
        let problem: StationaryProblem<f64> =
            StationaryProblem::new(grid, 0.3, ScalarField::zeros(grid), Coupling::quadratic());
        let (state, log) = newton_solve(&problem, &NewtonConfig::default()).unwrap();
        assert_eq!(log.len(), 1);
        assert!(state.u.max_abs() < 1e-10);
        assert!((state.lambda - 1.0).abs() < 1e-10);
        for &v in state.m.values() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_problem_converges_fast() {
        let problem = reference_problem_1d(50);
        let (state, log) = newton_solve(&problem, &NewtonConfig::default()).unwrap();
        assert!(log.len() <= 8, "newton took {} steps", log.len());
        assert!(log.final_metric().unwrap() < 1e-8);
        // The quadrature constraints are part of the residual, so they hold
        // at the reported tolerance.
        assert!(state.u.quadrature().abs() < 1e-8);
        assert!((state.m.quadrature() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn newton_and_policy_iteration_agree() {
        let problem = reference_problem_1d(40);
        let (newton_state, _) = newton_solve(&problem, &NewtonConfig::default()).unwrap();
        let (pi_state, _) = policy_iteration_stationary(
            &problem,
            &PolicyField::zeros(problem.grid),
            &PiConfig::default(),
        )
        .unwrap();
        let du = crate::field::discrete_l2_distance(&newton_state.u, &pi_state.u);
        let dm = crate::field::discrete_l2_distance(&newton_state.m, &pi_state.m);
        let dl = (newton_state.lambda - pi_state.lambda).abs();
        assert!(du < 1e-6, "u distance {du:.3e}");
        assert!(dm < 1e-6, "m distance {dm:.3e}");
        assert!(dl < 1e-8, "lambda gap {dl:.3e}");
    }
}
