//! Discrete differential operators on the periodic grid.
//!
//! All operators use the three-point stencil with periodic wrap-around and
//! mesh width `h = 1/I`. Gradients are two-sided: at node `i` the pair
//! `(D_L u, D_R u) = ((u_i − u_{[i−1]})/h, (u_{[i+1]} − u_i)/h)` per
//! dimension. The Hamiltonian and the advection assemblies clip the two
//! sides Engquist–Osher style, keeping `D_L⁺` and `D_R⁻` only, which makes
//! the Fokker–Planck matrix an M-matrix with zero column sums.

use crate::field::{PolicyField, ScalarField, TwoSidedGradient};
use crate::linalg::{LinAlgError, SparseMatrix};
use crate::scalar::{negative_part, positive_part, real, Real};

/// Periodic three-point Laplacian, `(Δ♯u)_i = Σ_axis (u_{[i−1]} − 2u_i +
/// u_{[i+1]})/h²`, without any diffusion coefficient.
pub fn discrete_laplacian<T: Real>(u: &ScalarField<T>) -> ScalarField<T> {
    let grid = u.grid();
    let h: T = grid.spacing();
    let h2 = h * h;
    let two = real::<T>(2.0);
    let mut out = ScalarField::zeros(grid);
    for node in 0..grid.total_nodes() {
        let mut sum = T::zero();
        for axis in 0..grid.dim() {
            let prev = u.get(grid.neighbor(node, axis, -1));
            let next = u.get(grid.neighbor(node, axis, 1));
            sum += (prev - two * u.get(node) + next) / h2;
        }
        out.set(node, sum);
    }
    out
}

/// Two-sided upwind gradient `D♯u` with components `(D_L u, D_R u)` per
/// dimension.
pub fn two_sided_gradient<T: Real>(u: &ScalarField<T>) -> TwoSidedGradient<T> {
    let grid = u.grid();
    let h: T = grid.spacing();
    let mut out = TwoSidedGradient::zeros(grid);
    for node in 0..grid.total_nodes() {
        for axis in 0..grid.dim() {
            let prev = u.get(grid.neighbor(node, axis, -1));
            let next = u.get(grid.neighbor(node, axis, 1));
            out.set_left(node, axis, (u.get(node) - prev) / h);
            out.set_right(node, axis, (next - u.get(node)) / h);
        }
    }
    out
}

/// Engquist–Osher squared gradient norm
/// `(|D♯u|²)_i = Σ_axis (D_L u)⁺² + (D_R u)⁻²` (not halved).
pub fn eikonal_hamiltonian<T: Real>(g: &TwoSidedGradient<T>) -> ScalarField<T> {
    let grid = g.grid();
    let mut out = ScalarField::zeros(grid);
    for node in 0..grid.total_nodes() {
        let mut sum = T::zero();
        for axis in 0..grid.dim() {
            let l = positive_part(g.left(node, axis));
            let r = negative_part(g.right(node, axis));
            sum += l * l + r * r;
        }
        out.set(node, sum);
    }
    out
}

/// Upwind transport term `Σ_axis Q_L⁺ D_L u + Q_R⁻ D_R u` per node.
pub fn apply_policy_dot_gradient<T: Real>(
    q: &PolicyField<T>,
    g: &TwoSidedGradient<T>,
) -> ScalarField<T> {
    let grid = q.grid();
    assert_eq!(grid, g.grid(), "policy and gradient grids differ");
    let mut out = ScalarField::zeros(grid);
    for node in 0..grid.total_nodes() {
        let mut sum = T::zero();
        for axis in 0..grid.dim() {
            sum += positive_part(q.left(node, axis)) * g.left(node, axis)
                + negative_part(q.right(node, axis)) * g.right(node, axis);
        }
        out.set(node, sum);
    }
    out
}

/// Running cost of a policy, `½ Σ_axis (Q_L⁺)² + (Q_R⁻)²` per node.
pub fn policy_half_norm_sq<T: Real>(q: &PolicyField<T>) -> ScalarField<T> {
    let grid = q.grid();
    let half = real::<T>(0.5);
    let mut out = ScalarField::zeros(grid);
    for node in 0..grid.total_nodes() {
        let mut sum = T::zero();
        for axis in 0..grid.dim() {
            let l = positive_part(q.left(node, axis));
            let r = negative_part(q.right(node, axis));
            sum += l * l + r * r;
        }
        out.set(node, half * sum);
    }
    out
}

/// Fokker–Planck transport matrix `A(Q) = −ε Δ♯ − div♯(· Q)` in conservative
/// upwind form. Row `i` has per-axis entries
///
/// ```text
/// A[i, i]     += 2ε/h² + (Q_L,i⁺ − Q_R,i⁻)/h
/// A[i, [i−1]] += −ε/h² + Q_R,[i−1]⁻/h
/// A[i, [i+1]] += −ε/h² − Q_L,[i+1]⁺/h
/// ```
///
/// so all column sums vanish (discrete mass conservation) and off-diagonal
/// entries are nonpositive whenever `ε/h ≥ max(Q_L⁺, −Q_R⁻)` fails to be
/// violated, making `μI + A(Q)` an M-matrix for any `μ > 0`.
pub fn assemble_fp_matrix<T: Real>(
    q: &PolicyField<T>,
    eps: T,
) -> Result<SparseMatrix<T>, LinAlgError> {
    if !q.is_finite() {
        return Err(LinAlgError::NonFinite("policy field"));
    }
    debug_assert!(eps > T::zero(), "diffusion coefficient must be positive");
    let grid = q.grid();
    let n = grid.total_nodes();
    let h: T = grid.spacing();
    let h2 = h * h;
    let two = real::<T>(2.0);
    let mut triplets = Vec::with_capacity(n * 3 * grid.dim());
    for node in 0..n {
        for axis in 0..grid.dim() {
            let prev = grid.neighbor(node, axis, -1);
            let next = grid.neighbor(node, axis, 1);
            triplets.push((
                node,
                node,
                two * eps / h2
                    + (positive_part(q.left(node, axis)) - negative_part(q.right(node, axis))) / h,
            ));
            triplets.push((
                node,
                prev,
                -eps / h2 + negative_part(q.right(prev, axis)) / h,
            ));
            triplets.push((
                node,
                next,
                -eps / h2 - positive_part(q.left(next, axis)) / h,
            ));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// Linearized Hamilton–Jacobi–Bellman operator
/// `Aᵀ(Q) = −ε Δ♯ + Q_L⁺ D_L + Q_R⁻ D_R`. Row `i` has per-axis entries
///
/// ```text
/// Aᵀ[i, i]     += 2ε/h² + (Q_L,i⁺ − Q_R,i⁻)/h
/// Aᵀ[i, [i−1]] += −ε/h² − Q_L,i⁺/h
/// Aᵀ[i, [i+1]] += −ε/h² + Q_R,i⁻/h
/// ```
///
/// This is assembled independently of [`assemble_fp_matrix`] from the same
/// scalar expressions, so it equals the exact entrywise transpose of `A(Q)`
/// bit for bit; all row sums vanish.
pub fn assemble_hjb_advection_matrix<T: Real>(
    q: &PolicyField<T>,
    eps: T,
) -> Result<SparseMatrix<T>, LinAlgError> {
    if !q.is_finite() {
        return Err(LinAlgError::NonFinite("policy field"));
    }
    debug_assert!(eps > T::zero(), "diffusion coefficient must be positive");
    let grid = q.grid();
    let n = grid.total_nodes();
    let h: T = grid.spacing();
    let h2 = h * h;
    let two = real::<T>(2.0);
    let mut triplets = Vec::with_capacity(n * 3 * grid.dim());
    for node in 0..n {
        for axis in 0..grid.dim() {
            let prev = grid.neighbor(node, axis, -1);
            let next = grid.neighbor(node, axis, 1);
            triplets.push((
                node,
                node,
                two * eps / h2
                    + (positive_part(q.left(node, axis)) - negative_part(q.right(node, axis))) / h,
            ));
            triplets.push((
                node,
                prev,
                -eps / h2 - positive_part(q.left(node, axis)) / h,
            ));
            triplets.push((
                node,
                next,
                -eps / h2 + negative_part(q.right(node, axis)) / h,
            ));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// Derivative of the conservative upwind divergence with respect to the
/// value function: row `i`, for the map `u ↦ −div♯(m · χ(g) D♯u)` where
/// `χ` freezes the Engquist–Osher branch choice of the gradient `g`.
///
/// With per-axis weights `α_j = m_j·1[D_L u_j > 0]/h²` and
/// `β_j = m_j·1[D_R u_j < 0]/h²`:
///
/// ```text
/// J[i, [i+1]] += −(α_{[i+1]} + β_i)
/// J[i, i]     += α_{[i+1]} + α_i + β_i + β_{[i−1]}
/// J[i, [i−1]] += −(α_i + β_{[i−1]})
/// ```
///
/// The matrix is symmetric with zero row and column sums. At a kink
/// (`D_L u = 0` or `D_R u = 0`) the clipped branch is chosen, i.e. the
/// weight is zero.
pub fn assemble_divergence_jacobian<T: Real>(
    m: &ScalarField<T>,
    g: &TwoSidedGradient<T>,
) -> SparseMatrix<T> {
    let grid = m.grid();
    assert_eq!(grid, g.grid(), "density and gradient grids differ");
    let n = grid.total_nodes();
    let h: T = grid.spacing();
    let h2 = h * h;
    let alpha = |node: usize, axis: usize| {
        if g.left(node, axis) > T::zero() {
            m.get(node) / h2
        } else {
            T::zero()
        }
    };
    let beta = |node: usize, axis: usize| {
        if g.right(node, axis) < T::zero() {
            m.get(node) / h2
        } else {
            T::zero()
        }
    };
    let mut triplets = Vec::with_capacity(n * 3 * grid.dim());
    for node in 0..n {
        for axis in 0..grid.dim() {
            let prev = grid.neighbor(node, axis, -1);
            let next = grid.neighbor(node, axis, 1);
            let a_here = alpha(node, axis);
            let a_next = alpha(next, axis);
            let b_here = beta(node, axis);
            let b_prev = beta(prev, axis);
            triplets.push((node, next, -(a_next + b_here)));
            triplets.push((node, node, a_next + a_here + b_here + b_prev));
            triplets.push((node, prev, -(a_here + b_prev)));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("finite divergence weights")
}
