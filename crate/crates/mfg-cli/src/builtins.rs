//! Built-in potentials, couplings, and initial/terminal data of the
//! reference experiments.

use mfg_core::{Coupling64, PeriodicGrid, ScalarField64};

use crate::config::ConfigError;

const TWO_PI: f64 = std::f64::consts::TAU;

/// `sin(2πx)` evaluated through the reflected argument on `(½, 1)`: since
/// `1 − x` is exact there, `sin(2π(1−x)) = −sin(2πx)` holds bit for bit and
/// the sampled field is exactly odd about `x = ½` on dyadic grids.
fn sin_two_pi_reflected(x: f64) -> f64 {
    if x > 0.5 {
        -(TWO_PI * (1.0 - x)).sin()
    } else {
        (TWO_PI * x).sin()
    }
}

/// Checks that `id` names a built-in potential compatible with `dim`.
pub fn check_potential(id: &str, dim: usize) -> Result<(), ConfigError> {
    match (id, dim) {
        ("zero", _) | ("paper-1d", 1) | ("paper-2d", 2) => Ok(()),
        ("paper-1d", _) => Err(ConfigError::Invalid(
            "potential `paper-1d` requires dim = 1".into(),
        )),
        ("paper-2d", _) => Err(ConfigError::Invalid(
            "potential `paper-2d` requires dim = 2".into(),
        )),
        _ => Err(ConfigError::Invalid(format!(
            "unknown potential `{id}`; expected zero, paper-1d, or paper-2d"
        ))),
    }
}

/// Samples the named potential at the grid nodes.
///
/// * `zero` — `V ≡ 0`.
/// * `paper-1d` — `V(x) = sin(2πx) + cos(4πx)`.
/// * `paper-2d` — `V(x₁,x₂) = −|sin(2πx₁)·sin(2πx₂)|`, with each sine
///   evaluated through [`sin_two_pi_reflected`] so the samples share the
///   reflection symmetries of the formula exactly.
pub fn builtin_potential(id: &str, grid: PeriodicGrid) -> Result<ScalarField64, ConfigError> {
    check_potential(id, grid.dim())?;
    Ok(match id {
        "zero" => ScalarField64::zeros(grid),
        "paper-1d" => ScalarField64::from_fn(grid, |x: [f64; 2]| {
            (TWO_PI * x[0]).sin() + (2.0 * TWO_PI * x[0]).cos()
        }),
        _ => ScalarField64::from_fn(grid, |x: [f64; 2]| {
            -(sin_two_pi_reflected(x[0]) * sin_two_pi_reflected(x[1])).abs()
        }),
    })
}

/// Checks that `id` names a built-in coupling.
pub fn check_coupling(id: &str) -> Result<(), ConfigError> {
    match id {
        "quadratic" | "zero" => Ok(()),
        _ => Err(ConfigError::Invalid(format!(
            "unknown coupling `{id}`; expected quadratic or zero"
        ))),
    }
}

/// Returns the named coupling cost: `quadratic` is `F(m) = m²`, `zero`
/// disables the coupling.
pub fn builtin_coupling(id: &str) -> Result<Coupling64, ConfigError> {
    check_coupling(id)?;
    Ok(match id {
        "quadratic" => Coupling64::quadratic(),
        _ => Coupling64::zero(),
    })
}

/// Checks that `id` names built-in initial/terminal data.
pub fn check_initial_data(id: &str) -> Result<(), ConfigError> {
    match id {
        "paper-gaussian" | "uniform-zero" => Ok(()),
        _ => Err(ConfigError::Invalid(format!(
            "unknown initial data `{id}`; expected paper-gaussian or uniform-zero"
        ))),
    }
}

/// Returns the named `(m₀, u_T)` pair; `m₀` is normalized to unit discrete
/// mass on the given grid.
///
/// * `paper-gaussian` — `m₀ = C·exp(−40·|x − ½|²)` with `C` fixed by
///   `∫♯m₀ = 1`, and `u_T = −m₀`.
/// * `uniform-zero` — `m₀ ≡ 1` and `u_T ≡ 0`.
pub fn builtin_initial_data(
    id: &str,
    grid: PeriodicGrid,
) -> Result<(ScalarField64, ScalarField64), ConfigError> {
    check_initial_data(id)?;
    Ok(match id {
        "paper-gaussian" => {
            let raw = ScalarField64::from_fn(grid, |x: [f64; 2]| {
                let mut r2 = 0.0;
                for coord in x.iter().take(grid.dim()) {
                    let d = coord - 0.5;
                    r2 += d * d;
                }
                (-40.0 * r2).exp()
            });
            let mass = raw.quadrature();
            let m0 = raw.map(|v| v / mass);
            let u_t = m0.map(|v| -v);
            (m0, u_t)
        }
        _ => {
            let mass = ScalarField64::constant(grid, 1.0).quadrature();
            (
                ScalarField64::constant(grid, 1.0 / mass),
                ScalarField64::zeros(grid),
            )
        }
    })
}
