//! Temporary diagnostic; delete before finalizing.

use mfg_core::coupling::Coupling;
use mfg_core::evolutive::{policy_iteration_evolutive, EvolutiveProblem, RhsPolicy};
use mfg_core::field::{PolicyField, ScalarField};
use mfg_core::grid::{PeriodicGrid, TimeGrid};
use mfg_core::newton::{newton_solve, NewtonConfig};
use mfg_core::stationary::{policy_iteration_stationary, PiConfig, StationaryProblem};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[test]
#[ignore]
fn probe_stationary_convergence() {
    for nodes in [200usize, 500, 1000] {
        let grid = PeriodicGrid::line(nodes);
        let potential = ScalarField::from_fn(grid, |x: [f64; 2]| {
            (TWO_PI * x[0]).sin() + (2.0 * TWO_PI * x[0]).cos()
        });
        let problem = StationaryProblem::new(grid, 0.3, potential, Coupling::quadratic());

        let (_, log) = newton_solve(&problem, &NewtonConfig::default()).unwrap();
        println!("I = {nodes}: newton iterations: {}", log.len());
        for rec in log.records() {
            println!("  NM iter {:2}  residual {:.3e}", rec.iteration, rec.metric);
        }

        let (_, log) =
            policy_iteration_stationary(&problem, &PolicyField::zeros(grid), &PiConfig::default())
                .unwrap();
        println!("I = {nodes}: pi iterations: {}", log.len());
    }
}

#[test]
#[ignore]
fn probe_evolutive_convergence() {
    let grid = PeriodicGrid::square(16);
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    let potential = ScalarField::from_fn(grid, |x: [f64; 2]| {
        -((TWO_PI * x[0]).sin() * (TWO_PI * x[1]).sin()).abs()
    });
    println!("m0 peak {:.3}", m0.max_value());
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 20),
        0.3,
        potential,
        Coupling::quadratic(),
        m0,
        ut,
    );
    let (_, log) = policy_iteration_evolutive(
        &problem,
        &problem.zero_policies(),
        &PiConfig::default(),
        RhsPolicy::NextTimeNode,
    )
    .unwrap();
    for rec in log.records() {
        if rec.iteration <= 10 || rec.iteration % 10 == 0 || rec.iteration + 5 >= log.len() {
            println!("iter {:3}  metric {:.3e}", rec.iteration, rec.metric);
        }
    }
}

#[test]
#[ignore]
fn probe_evolutive_variants() {
    let grid = PeriodicGrid::square(16);
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    let potential = ScalarField::from_fn(grid, |x: [f64; 2]| {
        -((TWO_PI * x[0]).sin() * (TWO_PI * x[1]).sin()).abs()
    });
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 20),
        0.3,
        potential,
        Coupling::quadratic(),
        m0,
        ut,
    );
    for rhs in [RhsPolicy::CurrentTimeNode] {
        let (state, log) = policy_iteration_evolutive(
            &problem,
            &problem.zero_policies(),
            &PiConfig::default(),
            rhs,
        )
        .unwrap();
        let m_peak = state
            .m
            .iter()
            .map(|s| s.max_value())
            .fold(f64::MIN, f64::max);
        let u_amp = state.u.iter().map(|s| s.max_abs()).fold(f64::MIN, f64::max);
        let q_amp = state
            .q
            .iter()
            .map(|s| s.max_node_norm())
            .fold(f64::MIN, f64::max);
        println!(
            "{rhs:?}: iterations {}  max m {m_peak:.3e}  max |u| {u_amp:.3e}  max |q| {q_amp:.3e}",
            log.len()
        );
        for rec in log.records() {
            if rec.iteration <= 6 || rec.iteration % 20 == 0 || rec.iteration + 3 >= log.len() {
                println!("  iter {:3}  metric {:.3e}", rec.iteration, rec.metric);
            }
        }
    }
}

#[test]
#[ignore]
fn probe_evolutive_iterates() {
    use mfg_core::evolutive::{fp_forward_sweep, hjb_backward_sweep};
    use mfg_core::stationary::update_policy;

    let grid = PeriodicGrid::square(16);
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    let potential = ScalarField::from_fn(grid, |x: [f64; 2]| {
        -((TWO_PI * x[0]).sin() * (TWO_PI * x[1]).sin()).abs()
    });
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 20),
        0.3,
        potential,
        Coupling::quadratic(),
        m0,
        ut,
    );
    let mut q = problem.zero_policies();
    for k in 1..=12 {
        let m = fp_forward_sweep(&q, &problem).unwrap();
        let u = hjb_backward_sweep(&q, &m, &problem, RhsPolicy::NextTimeNode).unwrap();
        q = u.iter().map(|s| update_policy(s, problem.cap)).collect();
        let m_peak = m.iter().map(|s| s.max_value()).fold(f64::MIN, f64::max);
        let u_amp = u.iter().map(|s| s.max_abs()).fold(f64::MIN, f64::max);
        let q_amp = q
            .iter()
            .flat_map(|s| s.components().iter().map(|v| v.abs()))
            .fold(f64::MIN, f64::max);
        println!("iter {k:2}  max m {m_peak:9.3e}  max |u| {u_amp:9.3e}  max |q| {q_amp:9.3e}");
    }
}

#[test]
#[ignore]
fn probe_evolutive_asymmetry() {
    use mfg_core::evolutive::{fp_forward_sweep, hjb_backward_sweep, policy_distance_sq};
    use mfg_core::stationary::update_policy;

    let grid = PeriodicGrid::square(16);
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    let sin_refl = |x: f64| {
        if x > 0.5 { -(TWO_PI * (1.0 - x)).sin() } else { (TWO_PI * x).sin() }
    };
    let potential = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        -(sin_refl(x[0]) * sin_refl(x[1])).abs()
    });

    let nodes = grid.nodes_per_dim();
    let asym = |f: &ScalarField<f64>| -> f64 {
        let mut worst = 0.0f64;
        for node in 0..grid.total_nodes() {
            let (i, j) = grid.split_index(node);
            for (ri, rj) in [((nodes - i) % nodes, j), (i, (nodes - j) % nodes)] {
                let mirror = grid.node_index(ri, rj);
                worst = worst.max((f.get(node) - f.get(mirror)).abs());
            }
        }
        worst
    };
    println!("V asymmetry {:.3e}  m0 asymmetry {:.3e}  uT asymmetry {:.3e}",
        asym(&potential), asym(&m0), asym(&ut));

    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, 20),
        0.3,
        potential,
        Coupling::quadratic(),
        m0,
        ut,
    );
    let mut q = problem.zero_policies();
    for k in 1..=55 {
        let m = fp_forward_sweep(&q, &problem).unwrap();
        let u = hjb_backward_sweep(&q, &m, &problem, RhsPolicy::CurrentTimeNode).unwrap();
        let q_next: Vec<PolicyField<f64>> =
            u.iter().map(|s| update_policy(s, problem.cap)).collect();
        let metric = q_next
            .iter()
            .zip(&q)
            .map(|(a, b)| policy_distance_sq(a, b))
            .fold(0.0f64, f64::max);
        q = q_next;
        let au = asym(&u[0]);
        let am = m.iter().map(|s| asym(s)).fold(0.0f64, f64::max);
        println!("iter {k:2}  metric {metric:10.3e}  asym u[0] {au:10.3e}  asym m {am:10.3e}");
    }
}

#[test]
#[ignore]
fn probe_full_scale_trajectory() {
    use mfg_core::evolutive::{fp_forward_sweep, hjb_backward_sweep, policy_distance_sq};
    use mfg_core::stationary::update_policy;
    use std::io::Write;
    use std::time::Instant;

    fn sin_refl(x: f64) -> f64 {
        if x > 0.5 {
            -(TWO_PI * (1.0 - x)).sin()
        } else {
            (TWO_PI * x).sin()
        }
    }

    let nodes: usize = std::env::var("PROBE_NODES")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(50);
    let tsteps: usize = std::env::var("PROBE_TSTEPS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(100);
    let grid = PeriodicGrid::square(nodes);
    let dim = grid.dim();
    let raw = ScalarField::from_fn(grid, move |x: [f64; 2]| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5) * (x[a] - 0.5)).sum();
        (-40.0 * r2).exp()
    });
    let mass = raw.quadrature();
    let m0 = raw.map(|v| v / mass);
    let ut = m0.map(|v| -v);
    let potential =
        ScalarField::from_fn(grid, |x: [f64; 2]| -(sin_refl(x[0]) * sin_refl(x[1])).abs());
    let problem = EvolutiveProblem::new(
        grid,
        TimeGrid::new(1.0, tsteps),
        0.3,
        potential,
        Coupling::quadratic(),
        m0,
        ut,
    );
    eprintln!("nodes {nodes}  tsteps {tsteps}");

    let cap: f64 = std::env::var("PROBE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(100.0);
    let pairing = match std::env::var("PROBE_PAIRING").as_deref() {
        Ok("current") => RhsPolicy::CurrentTimeNode,
        _ => RhsPolicy::NextTimeNode,
    };
    let max_it: usize = std::env::var("PROBE_MAXIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(120);
    let omega: f64 = std::env::var("PROBE_OMEGA")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1.0);
    eprintln!("cap {cap:.3e}  pairing {pairing:?}  max_it {max_it}  omega {omega}");

    let tol = 1e-8;
    let mut q: Vec<PolicyField<f64>> = problem.zero_policies();
    let start = Instant::now();
    for k in 1..=max_it {
        let iter_start = Instant::now();
        let m = fp_forward_sweep(&q, &problem).unwrap();
        let u = hjb_backward_sweep(&q, &m, &problem, pairing).unwrap();
        let q_next: Vec<PolicyField<f64>> = u
            .iter()
            .zip(&q)
            .map(|(slice, old)| {
                let fresh = update_policy(slice, cap);
                if omega == 1.0 {
                    return fresh;
                }
                let comps = fresh
                    .components()
                    .iter()
                    .zip(old.components())
                    .map(|(&f, &o)| (1.0 - omega) * o + omega * f)
                    .collect();
                PolicyField::from_components(grid, comps)
            })
            .collect();
        let mut metric = 0.0f64;
        let mut n_star = 0usize;
        for (n, (new, old)) in q_next.iter().zip(&q).enumerate() {
            let d = policy_distance_sq(new, old);
            if d > metric {
                metric = d;
                n_star = n;
            }
        }
        let max_q = q_next
            .iter()
            .map(|qn| qn.max_node_norm())
            .fold(0.0f64, f64::max);
        let max_m = m.iter().map(|s| s.max_value()).fold(0.0f64, f64::max);
        let max_u = u.iter().map(|s| s.max_abs()).fold(0.0f64, f64::max);
        eprintln!(
            "iter {k:3}  metric {metric:9.3e} @n={n_star:3}  max|q| {max_q:9.3e}  maxM {max_m:9.3e}  max|U| {max_u:9.3e}  iter_s {:5.1}  total_s {:7.1}",
            iter_start.elapsed().as_secs_f64(),
            start.elapsed().as_secs_f64()
        );
        std::io::stderr().flush().ok();
        if metric < tol {
            eprintln!("converged in {k} iterations");
            return;
        }
        q = q_next;
    }
    eprintln!("no convergence within {max_it} iterations");
}
