//! Finite-horizon mean field games solved by forward–backward policy
//! iteration.
//!
//! Time is discretized by implicit Euler on `N` steps of size `dt = T/N`.
//! For a frozen policy sequence `Q = (Q_0, …, Q_N)` the density marches
//! forward from `M_0 = m0` and the value function marches backward from
//! `U_N = u_T`:
//!
//! ```text
//! (I + dt·A(Q_{n+1})) M_{n+1} = M_n
//! (I + dt·Aᵀ(Q_n)) U_n = U_{n+1} + dt·(½|Q_±|² + V♯ + F♯(M_{n+1}))
//! ```
//!
//! where the running cost on the right uses `Q_n` by default
//! ([`RhsPolicy::CurrentTimeNode`]), so each backward step is a consistent
//! evaluation of the frozen policy it advects with. The variant
//! ([`RhsPolicy::NextTimeNode`]) pays the cost of `Q_{n+1}` instead; the
//! mixed indices destabilize coarse runs, where the cost injected at a node
//! can be far from the one its advection earns, and are kept only for
//! comparison. The conservative form keeps the discrete mass `∫♯M_n`
//! constant exactly, so no renormalization is applied between steps.

use crate::convergence::{ConvergenceLog, Stopwatch};
use crate::coupling::Coupling;
use crate::error::SolverError;
use crate::field::{PolicyField, ScalarField};
use crate::grid::{PeriodicGrid, TimeGrid};
use crate::linalg::{solve_square, LinAlgError};
use crate::operators::{assemble_fp_matrix, assemble_hjb_advection_matrix, policy_half_norm_sq};
use crate::scalar::{real, Real};
use crate::stationary::{default_cap, relax_policy, update_policy, PiConfig};

/// Which policy index feeds the running cost of a backward step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RhsPolicy {
    /// Pair the step from `t_{n+1}` to `t_n` with the cost of `Q_{n+1}`.
    /// Comparison variant: the mismatch between the advected policy and the
    /// paid cost feeds back on itself on coarse grids and can drive the
    /// early iterates into the policy cap.
    NextTimeNode,
    /// Use `Q_n` everywhere in the backward step (default), making the step
    /// an exact evaluation of the frozen policy.
    #[default]
    CurrentTimeNode,
}

/// Data of a finite-horizon game on the torus.
#[derive(Clone, Debug)]
pub struct EvolutiveProblem<T> {
    pub grid: PeriodicGrid,
    pub time: TimeGrid<T>,
    /// Diffusion coefficient `ε > 0`.
    pub eps: T,
    /// Potential `V♯` sampled at the grid nodes.
    pub potential: ScalarField<T>,
    pub coupling: Coupling<T>,
    /// Initial density `m0` with unit discrete mass.
    pub initial_density: ScalarField<T>,
    /// Terminal value `u_T`.
    pub terminal_value: ScalarField<T>,
    /// Norm cap of the policy update, as in the stationary solver.
    pub cap: T,
}

impl<T: Real> EvolutiveProblem<T> {
    pub fn new(
        grid: PeriodicGrid,
        time: TimeGrid<T>,
        eps: T,
        potential: ScalarField<T>,
        coupling: Coupling<T>,
        initial_density: ScalarField<T>,
        terminal_value: ScalarField<T>,
    ) -> Self {
        assert_eq!(potential.grid(), grid, "potential lives on another grid");
        assert_eq!(initial_density.grid(), grid, "m0 lives on another grid");
        assert_eq!(terminal_value.grid(), grid, "u_T lives on another grid");
        assert!(eps > T::zero(), "diffusion coefficient must be positive");
        assert!(potential.is_finite() && initial_density.is_finite() && terminal_value.is_finite());
        assert!(
            initial_density.min_value() >= T::zero(),
            "m0 must be nonnegative"
        );
        let mass_defect = (initial_density.quadrature() - T::one()).abs();
        assert!(
            mass_defect < real::<T>(1e-8).max(T::epsilon() * real(1e4)),
            "m0 must have unit discrete mass"
        );
        Self {
            grid,
            time,
            eps,
            potential,
            coupling,
            initial_density,
            terminal_value,
            cap: default_cap(),
        }
    }

    pub fn with_cap(mut self, cap: T) -> Self {
        assert!(cap > T::zero(), "policy cap must be positive");
        self.cap = cap;
        self
    }

    /// Zero policy at every time node, the standard starting guess.
    pub fn zero_policies(&self) -> Vec<PolicyField<T>> {
        (0..=self.time.steps())
            .map(|_| PolicyField::zeros(self.grid))
            .collect()
    }
}

/// Solution of the finite-horizon system; each sequence has `N + 1` entries
/// indexed by time node.
#[derive(Clone, Debug)]
pub struct EvolutiveState<T> {
    pub u: Vec<ScalarField<T>>,
    pub m: Vec<ScalarField<T>>,
    pub q: Vec<PolicyField<T>>,
}

fn check_policy_sequence<T: Real>(q: &[PolicyField<T>], problem: &EvolutiveProblem<T>) {
    assert_eq!(
        q.len(),
        problem.time.steps() + 1,
        "need one policy per time node"
    );
    for qn in q {
        assert_eq!(qn.grid(), problem.grid, "policy lives on another grid");
    }
}

/// Marches the density forward through the implicit Euler steps
/// `(I + dt·A(Q_{n+1})) M_{n+1} = M_n`. Returns all `N + 1` time slices.
pub fn fp_forward_sweep<T: Real>(
    q: &[PolicyField<T>],
    problem: &EvolutiveProblem<T>,
) -> Result<Vec<ScalarField<T>>, LinAlgError> {
    check_policy_sequence(q, problem);
    let steps = problem.time.steps();
    let dt = problem.time.dt();
    let mut m = Vec::with_capacity(steps + 1);
    m.push(problem.initial_density.clone());
    for n in 0..steps {
        let a = assemble_fp_matrix(&q[n + 1], problem.eps)?;
        let stepper = a.scaled(dt).shift_diagonal(T::one());
        let next = solve_square(&stepper, m[n].values())?;
        let next = ScalarField::from_values(problem.grid, next);
        let defect = (next.quadrature() - m[n].quadrature()).abs();
        if defect > real::<T>(1e-10).max(T::epsilon() * real(1e5)) {
            log::warn!("forward step {n} drifted mass by {defect}");
        }
        m.push(next);
    }
    Ok(m)
}

/// Marches the value function backward through
/// `(I + dt·Aᵀ(Q_n)) U_n = U_{n+1} + dt·(½|Q_±|² + V♯ + F♯(M_{n+1}))`,
/// with the running-cost policy chosen by `rhs_policy`. Returns all `N + 1`
/// time slices.
pub fn hjb_backward_sweep<T: Real>(
    q: &[PolicyField<T>],
    m: &[ScalarField<T>],
    problem: &EvolutiveProblem<T>,
    rhs_policy: RhsPolicy,
) -> Result<Vec<ScalarField<T>>, LinAlgError> {
    check_policy_sequence(q, problem);
    let steps = problem.time.steps();
    assert_eq!(m.len(), steps + 1, "need one density per time node");
    let dt = problem.time.dt();
    let n_nodes = problem.grid.total_nodes();

    let mut u = vec![problem.terminal_value.clone(); steps + 1];
    for n in (0..steps).rev() {
        let a = assemble_hjb_advection_matrix(&q[n], problem.eps)?;
        let stepper = a.scaled(dt).shift_diagonal(T::one());
        let cost_policy = match rhs_policy {
            RhsPolicy::NextTimeNode => &q[n + 1],
            RhsPolicy::CurrentTimeNode => &q[n],
        };
        let cost = policy_half_norm_sq(cost_policy);
        let mut rhs = vec![T::zero(); n_nodes];
        for (i, slot) in rhs.iter_mut().enumerate() {
            *slot = u[n + 1].get(i)
                + dt * (cost.get(i)
                    + problem.potential.get(i)
                    + problem.coupling.eval(m[n + 1].get(i)));
        }
        let values = solve_square(&stepper, &rhs)?;
        u[n] = ScalarField::from_values(problem.grid, values);
    }
    Ok(u)
}

/// Squared policy distance `∫♯|a − b|²`, summing all `2d` components.
pub fn policy_distance_sq<T: Real>(a: &PolicyField<T>, b: &PolicyField<T>) -> T {
    assert_eq!(a.grid(), b.grid(), "policies live on different grids");
    let mut sum = T::zero();
    for (&x, &y) in a.components().iter().zip(b.components()) {
        let d = x - y;
        sum += d * d;
    }
    sum * a.grid().cell_volume()
}

/// Policy iteration for the finite-horizon system.
///
/// Each outer iteration sweeps the density forward and the value function
/// backward under the frozen policy sequence, then refreshes every policy
/// as the capped gradient of its value slice, relaxed against the previous
/// policy by `cfg.relaxation`. Stops when
/// `max_n ∫♯|Q⁽ᵏ⁺¹⁾_n − Q⁽ᵏ⁾_n|²` falls below `cfg.tol`; that metric is
/// recorded in the log.
///
/// Strongly coupled problems (sharp data, fine time steps) can drive the
/// plain `ω = 1` update into a long-lived transient in which the density
/// collapses under the frozen drift before the congestion cost in the
/// value function can answer, and the two overshoot each other in
/// alternation. A relaxation weight below 1 (combined with a moderate
/// policy cap) averages the alternating phases and restores geometric
/// convergence; the fixed point itself is unchanged.
pub fn policy_iteration_evolutive<T: Real>(
    problem: &EvolutiveProblem<T>,
    q0: &[PolicyField<T>],
    cfg: &PiConfig<T>,
    rhs_policy: RhsPolicy,
) -> Result<(EvolutiveState<T>, ConvergenceLog), SolverError<EvolutiveState<T>>> {
    check_policy_sequence(q0, problem);
    assert!(cfg.max_outer >= 1, "need at least one outer iteration");

    let watch = Stopwatch::start();
    let mut log = ConvergenceLog::new();
    let mut q = q0.to_vec();

    for k in 1..=cfg.max_outer {
        let m = fp_forward_sweep(&q, problem)?;
        let u = hjb_backward_sweep(&q, &m, problem, rhs_policy)?;
        let q_next: Vec<PolicyField<T>> = u
            .iter()
            .zip(&q)
            .map(|(slice, old)| {
                relax_policy(old, update_policy(slice, problem.cap), cfg.relaxation)
            })
            .collect();

        let mut metric = T::zero();
        for (new, old) in q_next.iter().zip(&q) {
            metric = metric.max(policy_distance_sq(new, old));
        }
        log.push(k, metric.to_f64().unwrap_or(f64::NAN), watch.elapsed_seconds());

        if metric < cfg.tol {
            return Ok((EvolutiveState { u, m, q: q_next }, log));
        }
        if k == cfg.max_outer {
            return Err(SolverError::MaxIterations {
                state: Box::new(EvolutiveState { u, m, q: q_next }),
                log,
            });
        }
        q = q_next;
    }
    unreachable!("loop returns on the last iteration")
}

/// Collapses a two-sided policy into `d` per-axis fields `Q_L + Q_R` for
/// output. For `Q = D♯u` this is the raw sum
/// `(u_{[i+1]} − u_{[i−1]})/h`, twice the classical centered difference.
pub fn merge_policy_for_output<T: Real>(q: &PolicyField<T>) -> Vec<ScalarField<T>> {
    let grid = q.grid();
    (0..grid.dim())
        .map(|axis| {
            let mut f = ScalarField::zeros(grid);
            for node in 0..grid.total_nodes() {
                f.set(node, q.left(node, axis) + q.right(node, axis));
            }
            f
        })
        .collect()
}
