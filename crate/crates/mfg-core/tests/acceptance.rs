//! Acceptance gate: one test per criterion, each printing a `PASS` line
//! with the measured quantities once its assertions hold. Run with
//! `cargo test -p mfg-core --test acceptance -- --nocapture`; the one
//! full-scale run is `#[ignore]`d and meant for
//! `cargo test --release -p mfg-core --test acceptance -- --ignored --nocapture`.

use mfg_core::coupling::Coupling;
use mfg_core::evolutive::{
    fp_forward_sweep, hjb_backward_sweep, policy_distance_sq, policy_iteration_evolutive,
    EvolutiveProblem, RhsPolicy,
};
use mfg_core::field::{discrete_l2_distance, PolicyField, ScalarField};
use mfg_core::grid::{PeriodicGrid, TimeGrid};
use mfg_core::linalg::{residual_norm2, solve_least_squares, SparseMatrix};
use mfg_core::newton::{assemble_jacobian, newton_solve, NewtonConfig};
use mfg_core::operators::{assemble_fp_matrix, assemble_hjb_advection_matrix};
use mfg_core::stationary::{
    policy_iteration_stationary, solve_fp_mmatrix, solve_hjb_ergodic, stationary_residual,
    update_policy, PiConfig, StationaryProblem, StationaryState,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn potential_1d(grid: PeriodicGrid) -> ScalarField<f64> {
    ScalarField::from_fn(grid, |x: [f64; 2]| {
        (TWO_PI * x[0]).sin() + (2.0 * TWO_PI * x[0]).cos()
    })
}

/// `sin(2πx)` evaluated through the reflected argument on (½, 1), which
/// makes the float realization exactly odd about ½ whenever `1 − x` is
/// exact (dyadic grids); `sin(2π(1−x)) = −sin(2πx)` holds identically.
fn sin_two_pi_reflected(x: f64) -> f64 {
    if x > 0.5 {
        -(TWO_PI * (1.0 - x)).sin()
    } else {
        (TWO_PI * x).sin()
    }
}

fn potential_2d(grid: PeriodicGrid) -> ScalarField<f64> {
    ScalarField::from_fn(grid, |x: [f64; 2]| {
        -(sin_two_pi_reflected(x[0]) * sin_two_pi_reflected(x[1])).abs()
    })
}

/// Normalized Gaussian bump centered at ½ in every active axis, and its
/// negative as the terminal cost.
fn gaussian_data(grid: PeriodicGrid) -> (ScalarField<f64>, ScalarField<f64>) {
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    (m0, ut)
}

fn reference_problem_1d(nodes: usize) -> StationaryProblem<f64> {
    let grid = PeriodicGrid::line(nodes);
    StationaryProblem::new(grid, 0.3, potential_1d(grid), Coupling::quadratic())
}

fn random_policy(rng: &mut ChaCha8Rng, grid: PeriodicGrid, amplitude: f64) -> PolicyField<f64> {
    let mut q = PolicyField::zeros(grid);
    for node in 0..grid.total_nodes() {
        for axis in 0..grid.dim() {
            q.set_left(node, axis, amplitude * rng.gen_range(-1.0..1.0));
            q.set_right(node, axis, amplitude * rng.gen_range(-1.0..1.0));
        }
    }
    q
}

fn assert_unit_mass_and_positivity(m: &ScalarField<f64>, context: &str) {
    let defect = (m.quadrature() - 1.0).abs();
    assert!(defect <= 1e-12, "{context}: mass defect {defect}");
    assert!(
        m.min_value() >= -1e-12,
        "{context}: negative density {}",
        m.min_value()
    );
}

#[test]
fn criterion_01_iteration_counts_match_reference_table() {
    let mut newton_counts = Vec::new();
    let mut pi_counts = Vec::new();
    for nodes in [200usize, 500, 1000] {
        let problem = reference_problem_1d(nodes);

        let (_, log) = newton_solve(&problem, &NewtonConfig::default()).unwrap();
        assert!(
            log.len() <= 8,
            "Newton took {} iterations at I = {nodes}",
            log.len()
        );
        newton_counts.push(log.len());

        let (_, log) =
            policy_iteration_stationary(&problem, &PolicyField::zeros(problem.grid), &PiConfig::default())
                .unwrap();
        assert!(
            (15..=40).contains(&log.len()),
            "policy iteration took {} iterations at I = {nodes}",
            log.len()
        );
        pi_counts.push(log.len());
    }
    println!(
        "criterion 01 PASS — stationary 1D iteration counts at I ∈ {{200, 500, 1000}}: \
         Newton {newton_counts:?} (≤ 8), policy iteration {pi_counts:?} (within 15–40)"
    );
}

#[test]
fn criterion_02_methods_agree_on_the_same_equilibrium() {
    let problem = reference_problem_1d(200);
    let (pi, _) =
        policy_iteration_stationary(&problem, &PolicyField::zeros(problem.grid), &PiConfig::default())
            .unwrap();
    let (nm, _) = newton_solve(&problem, &NewtonConfig::default()).unwrap();

    let du = discrete_l2_distance(&pi.u, &nm.u);
    let dm = discrete_l2_distance(&pi.m, &nm.m);
    let dl = (pi.lambda - nm.lambda).abs();
    assert!(du < 1e-6, "value functions differ by {du}");
    assert!(dm < 1e-6, "densities differ by {dm}");
    assert!(dl < 1e-8, "ergodic constants differ by {dl}");
    println!(
        "criterion 02 PASS — policy iteration and Newton agree at I = 200: \
         ‖ΔU‖ = {du:.2e}, ‖ΔM‖ = {dm:.2e}, |ΔΛ| = {dl:.2e}"
    );
}

#[test]
fn criterion_03_transport_transpose_is_the_advection_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0usize;
    for nodes in [4usize, 8, 16] {
        for grid in [PeriodicGrid::line(nodes), PeriodicGrid::square(nodes)] {
            for _ in 0..17 {
                let q = random_policy(&mut rng, grid, 3.0);
                let transported = assemble_fp_matrix(&q, 0.3).unwrap().transpose();
                let advection = assemble_hjb_advection_matrix(&q, 0.3).unwrap();
                assert_eq!(
                    transported.to_dense(),
                    advection.to_dense(),
                    "transpose identity failed on dim {} with {nodes} nodes",
                    grid.dim()
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 100);
    println!(
        "criterion 03 PASS — A(Q)ᵀ equals the advection assembly bitwise for \
         {checked} random policies on 1D and 2D grids with I ∈ {{4, 8, 16}}"
    );
}

#[test]
fn criterion_04_mass_and_positivity_hold_throughout_both_solvers() {
    // Stationary: replicate the solver loop so the density can be checked
    // after every single kernel projection, not only at the end.
    let problem = reference_problem_1d(60);
    let cfg = PiConfig::default();
    let mut q = PolicyField::zeros(problem.grid);
    let mut previous = ScalarField::constant(problem.grid, 1.0);
    let mut outer_stationary = 0usize;
    for k in 1..=200 {
        let m = solve_fp_mmatrix(&q, &problem, &previous, &cfg).unwrap();
        assert_unit_mass_and_positivity(&m, &format!("stationary iteration {k}"));
        let (u, lambda) = solve_hjb_ergodic(&q, &m, &problem).unwrap();
        let state = StationaryState { u, m, lambda };
        let metric = residual_norm2(&stationary_residual(&state, &problem));
        q = update_policy(&state.u, problem.cap);
        previous = state.m;
        outer_stationary = k;
        if metric < cfg.tol {
            break;
        }
    }
    assert!(outer_stationary < 200, "stationary run did not converge");

    // Evolutive: same treatment per time node and outer iteration.
    let grid = PeriodicGrid::line(32);
    let (m0, ut) = gaussian_data(grid);
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 16),
        0.3,
        potential_1d(grid),
        Coupling::quadratic(),
        m0,
        ut,
    );
    let mut q = problem.zero_policies();
    let mut outer_evolutive = 0usize;
    for k in 1..=300 {
        let m = fp_forward_sweep(&q, &problem).unwrap();
        for (n, slice) in m.iter().enumerate() {
            assert_unit_mass_and_positivity(
                slice,
                &format!("evolutive iteration {k}, time node {n}"),
            );
        }
        let u = hjb_backward_sweep(&q, &m, &problem, RhsPolicy::default()).unwrap();
        let q_next: Vec<PolicyField<f64>> =
            u.iter().map(|slice| update_policy(slice, problem.cap)).collect();
        let metric = q_next
            .iter()
            .zip(&q)
            .map(|(a, b)| policy_distance_sq(a, b))
            .fold(0.0f64, f64::max);
        q = q_next;
        outer_evolutive = k;
        if metric < 1e-8 {
            break;
        }
    }
    assert!(outer_evolutive < 300, "evolutive run did not converge");

    println!(
        "criterion 04 PASS — |∫♯M − 1| ≤ 1e-12 and min M ≥ −1e-12 at every one of \
         {outer_stationary} stationary iterations and every time node of \
         {outer_evolutive} evolutive iterations"
    );
}

#[test]
fn criterion_05_kernel_projection_matches_dense_nullspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(211);
    let grid = PeriodicGrid::line(8);
    let problem = StationaryProblem::new(grid, 0.3, ScalarField::zeros(grid), Coupling::zero());
    let cfg = PiConfig {
        inner_steps: 500,
        ..PiConfig::default()
    };
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let q = random_policy(&mut rng, grid, 1.0);
        let m = solve_fp_mmatrix(&q, &problem, &ScalarField::constant(grid, 1.0), &cfg).unwrap();

        let a = assemble_fp_matrix(&q, problem.eps).unwrap();
        let dense = DMatrix::from_row_slice(a.nrows(), a.ncols(), &a.to_dense());
        let svd = dense.svd(true, true);
        let k_min = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(k, _)| k)
            .unwrap();
        let v_t = svd.v_t.as_ref().unwrap();
        let mut kernel =
            ScalarField::from_values(grid, v_t.row(k_min).iter().copied().collect());
        let mass = kernel.quadrature();
        assert!(mass.abs() > 1e-8, "kernel direction carries no mass");
        kernel.scale(1.0 / mass);

        let deviation = (0..grid.total_nodes())
            .map(|node| (m.get(node) - kernel.get(node)).abs())
            .fold(0.0f64, f64::max);
        assert!(deviation <= 1e-8, "trial {trial}: deviation {deviation}");
        worst = worst.max(deviation);
    }
    println!(
        "criterion 05 PASS — M-matrix iteration (s = 500) matches the dense \
         nullspace for 10 random policies on I = 8; worst deviation {worst:.2e}"
    );
}

/// Random stationary state whose one-sided differences stay away from the
/// Engquist–Osher kinks, so the residual is smooth around it.
fn random_kink_free_state(
    rng: &mut ChaCha8Rng,
    grid: PeriodicGrid,
) -> StationaryState<f64> {
    loop {
        let mut u = ScalarField::zeros(grid);
        for node in 0..grid.total_nodes() {
            u.set(node, rng.gen_range(-0.5..0.5));
        }
        let h = grid.spacing::<f64>();
        let kink_free = (0..grid.total_nodes()).all(|node| {
            (0..grid.dim()).all(|axis| {
                let left = (u.get(node) - u.get(grid.neighbor(node, axis, -1))) / h;
                let right = (u.get(grid.neighbor(node, axis, 1)) - u.get(node)) / h;
                left.abs() > 1e-3 && right.abs() > 1e-3
            })
        });
        if !kink_free {
            continue;
        }
        let mut m = ScalarField::zeros(grid);
        for node in 0..grid.total_nodes() {
            m.set(node, rng.gen_range(0.5..1.5));
        }
        return StationaryState {
            u,
            m,
            lambda: rng.gen_range(-1.0..1.0),
        };
    }
}

#[test]
fn criterion_06_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(307);
    let grid = PeriodicGrid::line(6);
    let problem = StationaryProblem::new(grid, 0.3, potential_1d(grid), Coupling::quadratic());
    let n = grid.total_nodes();
    let step = 1e-6;

    let residual_at = |x: &[f64]| -> Vec<f64> {
        let state = StationaryState {
            u: ScalarField::from_values(grid, x[..n].to_vec()),
            m: ScalarField::from_values(grid, x[n..2 * n].to_vec()),
            lambda: x[2 * n],
        };
        stationary_residual(&state, &problem)
    };

    let mut worst = 0.0f64;
    for trial in 0..3 {
        let state = random_kink_free_state(&mut rng, grid);
        let jacobian = assemble_jacobian(&state, &problem);
        let mut x: Vec<f64> = state.u.values().to_vec();
        x.extend_from_slice(state.m.values());
        x.push(state.lambda);

        for col in 0..2 * n + 1 {
            let mut plus = x.clone();
            plus[col] += step;
            let mut minus = x.clone();
            minus[col] -= step;
            let (rp, rm) = (residual_at(&plus), residual_at(&minus));
            let fd: Vec<f64> = rp
                .iter()
                .zip(&rm)
                .map(|(p, m)| (p - m) / (2.0 * step))
                .collect();
            let diff: Vec<f64> = (0..2 * n + 2)
                .map(|row| jacobian.get(row, col) - fd[row])
                .collect();
            let scale = residual_norm2(&fd);
            assert!(scale > 0.0, "finite-difference column {col} vanished");
            let rel = residual_norm2(&diff) / scale;
            assert!(
                rel < 1e-5,
                "trial {trial}, column {col}: relative error {rel}"
            );
            worst = worst.max(rel);
        }
    }
    println!(
        "criterion 06 PASS — all Jacobian columns match central finite differences \
         on 3 random kink-free states at I = 6; worst relative error {worst:.2e}"
    );
}

#[test]
fn criterion_07_dropping_coupling_blocks_reproduces_policy_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let grid = PeriodicGrid::line(8);
    let problem = StationaryProblem::new(grid, 0.3, potential_1d(grid), Coupling::quadratic());
    let n = grid.total_nodes();
    let h = grid.cell_volume::<f64>();

    let mut worst = 0.0f64;
    for trial in 0..3 {
        let state = random_kink_free_state(&mut rng, grid);

        // Quasi-Newton step: least-squares solve of the Jacobian with the
        // coupling block −F′(M) and the drift block ∂_U(A M) removed.
        let jacobian = assemble_jacobian(&state, &problem);
        let kept: Vec<(usize, usize, f64)> = jacobian
            .entries()
            .filter(|&(r, c, _)| {
                let coupling_block = r < n && (n..2 * n).contains(&c);
                let drift_block = (n..2 * n).contains(&r) && c < n;
                !(coupling_block || drift_block)
            })
            .collect();
        let decoupled = SparseMatrix::from_triplets(2 * n + 2, 2 * n + 1, kept).unwrap();
        let rhs: Vec<f64> = stationary_residual(&state, &problem)
            .iter()
            .map(|&v| -v)
            .collect();
        let delta = solve_least_squares(&decoupled, &rhs).unwrap();

        // One policy-iteration step from the same state with Q = D♯U: the
        // exact kernel density for Q, then the ergodic system with the
        // not-yet-updated density in the coupling term.
        let q = update_policy(&state.u, problem.cap);
        let transport = assemble_fp_matrix(&q, problem.eps).unwrap();
        let mut triplets: Vec<(usize, usize, f64)> = transport.entries().collect();
        for c in 0..n {
            triplets.push((n, c, h));
        }
        let constrained = SparseMatrix::from_triplets(n + 1, n, triplets).unwrap();
        let mut kernel_rhs = vec![0.0f64; n + 1];
        kernel_rhs[n] = 1.0;
        let m_pi = solve_least_squares(&constrained, &kernel_rhs).unwrap();
        let (u_pi, lambda_pi) = solve_hjb_ergodic(&q, &state.m, &problem).unwrap();

        for i in 0..n {
            let du = (state.u.get(i) + delta[i] - u_pi.get(i)).abs();
            let dm = (state.m.get(i) + delta[n + i] - m_pi[i]).abs();
            assert!(du < 1e-10, "trial {trial}: U mismatch {du} at node {i}");
            assert!(dm < 1e-10, "trial {trial}: M mismatch {dm} at node {i}");
            worst = worst.max(du.max(dm));
        }
        let dl = (state.lambda + delta[2 * n] - lambda_pi).abs();
        assert!(dl < 1e-10, "trial {trial}: Λ mismatch {dl}");
        worst = worst.max(dl);
    }
    println!(
        "criterion 07 PASS — the block-dropped Newton step equals one policy-iteration \
         step (Q = D♯U) on 3 random states at I = 8; worst mismatch {worst:.2e}"
    );
}

fn reflected_node(grid: PeriodicGrid, node: usize, flip_x: bool, flip_y: bool) -> usize {
    let nodes = grid.nodes_per_dim();
    let (i, j) = grid.split_index(node);
    let ri = if flip_x { (nodes - i) % nodes } else { i };
    let rj = if flip_y { (nodes - j) % nodes } else { j };
    grid.node_index(ri, rj)
}

#[test]
fn criterion_08_reduced_evolutive_2d_run_is_symmetric_and_conservative() {
    let grid = PeriodicGrid::square(16);
    let (m0, ut) = gaussian_data(grid);
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 20),
        0.3,
        potential_2d(grid),
        Coupling::quadratic(),
        m0,
        ut,
    );
    let (state, log) = policy_iteration_evolutive(
        &problem,
        &problem.zero_policies(),
        &PiConfig::default(),
        RhsPolicy::default(),
    )
    .unwrap();
    assert!(log.len() <= 100, "took {} iterations", log.len());

    let mut worst = 0.0f64;
    for n in 0..=problem.time.steps() {
        assert_unit_mass_and_positivity(&state.m[n], &format!("time node {n}"));
        for (flip_x, flip_y) in [(true, false), (false, true)] {
            for node in 0..grid.total_nodes() {
                let mirror = reflected_node(grid, node, flip_x, flip_y);
                let du = (state.u[n].get(node) - state.u[n].get(mirror)).abs();
                let dm = (state.m[n].get(node) - state.m[n].get(mirror)).abs();
                assert!(
                    du <= 1e-10 && dm <= 1e-10,
                    "asymmetry at time node {n}: ΔU = {du}, ΔM = {dm}"
                );
                worst = worst.max(du.max(dm));
            }
        }
    }
    println!(
        "criterion 08 PASS — 2D evolutive run (I = 16, N = 20) converged in {} \
         iterations; fields invariant under both reflections to 1e-10 \
         (worst {worst:.2e}) with exact mass conservation",
        log.len()
    );
}

fn periodic_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Nodes whose density is at least that of all 2d neighbors.
fn local_maxima(m: &ScalarField<f64>) -> Vec<(usize, f64)> {
    let grid = m.grid();
    let mut maxima: Vec<(usize, f64)> = (0..grid.total_nodes())
        .filter(|&node| {
            (0..grid.dim()).all(|axis| {
                m.get(node) >= m.get(grid.neighbor(node, axis, -1))
                    && m.get(node) >= m.get(grid.neighbor(node, axis, 1))
            })
        })
        .map(|node| (node, m.get(node)))
        .collect();
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    maxima
}

#[test]
#[ignore = "full-scale 2D run; execute with --release --ignored"]
fn criterion_09_full_scale_evolutive_2d_run() {
    let grid = PeriodicGrid::square(50);
    let (m0, ut) = gaussian_data(grid);
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 100),
        0.3,
        potential_2d(grid),
        Coupling::quadratic(),
        m0,
        ut,
    );
    let (state, log) = policy_iteration_evolutive(
        &problem,
        &problem.zero_policies(),
        &PiConfig::default(),
        RhsPolicy::default(),
    )
    .unwrap();
    assert!(
        (40..=80).contains(&log.len()),
        "took {} iterations",
        log.len()
    );
    for n in 0..=problem.time.steps() {
        assert_unit_mass_and_positivity(&state.m[n], &format!("time node {n}"));
    }

    // Halfway through the horizon the density concentrates near the four
    // potential minima; the cell diameter is the admissible mismatch.
    let cell = grid.spacing::<f64>();
    let targets = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];
    let halfway = &state.m[problem.time.steps() / 2];
    let tops = local_maxima(halfway);
    assert!(tops.len() >= 4, "found only {} local maxima", tops.len());
    let mut matched = [false; 4];
    for &(node, _) in &tops[..4] {
        let x: [f64; 2] = grid.coords(node);
        let (best, dist) = targets
            .iter()
            .enumerate()
            .map(|(t, &(tx, ty))| {
                let d = periodic_distance(x[0], tx).max(periodic_distance(x[1], ty));
                (t, d)
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(
            dist <= cell + 1e-12,
            "local maximum at ({}, {}) is {dist} from its nearest target",
            x[0],
            x[1]
        );
        matched[best] = true;
    }
    assert!(
        matched.iter().all(|&m| m),
        "the four largest maxima do not cover all four potential minima"
    );

    // At the final time the terminal reward −m₀ pulls everyone to the
    // center.
    let terminal = &state.m[problem.time.steps()];
    let argmax = (0..grid.total_nodes())
        .max_by(|&a, &b| terminal.get(a).partial_cmp(&terminal.get(b)).unwrap())
        .unwrap();
    let x: [f64; 2] = grid.coords(argmax);
    let dist = periodic_distance(x[0], 0.5).max(periodic_distance(x[1], 0.5));
    assert!(
        dist <= cell + 1e-12,
        "terminal argmax at ({}, {}) is {dist} from the center",
        x[0],
        x[1]
    );

    println!(
        "criterion 09 PASS — full-scale 2D run (I = 50, N = 100) converged in {} \
         iterations; halfway maxima sit on the four potential minima and the \
         terminal argmax is one cell from (½, ½)",
        log.len()
    );
}

#[test]
fn criterion_10_trivial_game_recovers_the_constant_state() {
    let grid = PeriodicGrid::line(20);
    let problem: StationaryProblem<f64> =
        StationaryProblem::new(grid, 0.3, ScalarField::zeros(grid), Coupling::quadratic());

    let (pi, _) =
        policy_iteration_stationary(&problem, &PolicyField::zeros(grid), &PiConfig::default())
            .unwrap();
    let (nm, _) = newton_solve(&problem, &NewtonConfig::default()).unwrap();

    for (state, label) in [(&pi, "policy iteration"), (&nm, "Newton")] {
        assert!(state.u.max_abs() < 1e-10, "{label}: U not flat");
        assert!((state.lambda - 1.0).abs() < 1e-10, "{label}: Λ ≠ 1");
        for node in 0..grid.total_nodes() {
            assert!((state.m.get(node) - 1.0).abs() < 1e-10, "{label}: M ≠ 1");
        }
    }
    println!(
        "criterion 10 PASS — with V ≡ 0 and F(m) = m² both methods return \
         U ≡ 0, M ≡ 1, Λ = 1 to 1e-10"
    );
}
