//! Sparse linear algebra: CSR matrices, LU factorization and solve drivers.
//!
//! The solvers in this crate produce square systems that are sparse with a
//! handful of dense rows or columns (quadrature rows, the ergodic-constant
//! column) and least-squares systems with the same structure. Both drivers
//! here use the sparse LU of [`lu::SparseLu`] and iterative refinement to
//! reach a requested residual tolerance.

mod lu;

pub use lu::SparseLu;

use crate::scalar::{real, Real};

/// Errors reported by matrix assembly and the solve drivers.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LinAlgError {
    /// The matrix is singular, or refinement could not reach the residual
    /// tolerance.
    #[error("matrix is singular or the solve did not reach the residual tolerance")]
    SingularSystem,
    /// The least-squares normal system is singular, or the gradient
    /// tolerance could not be met.
    #[error("least-squares system is rank-deficient or did not reach the gradient tolerance")]
    RankDeficient,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

/// Sparse matrix in compressed sparse row format.
///
/// Construction goes through [`SparseMatrix::from_triplets`], which sums
/// duplicate entries, drops exact zeros and rejects non-finite values, so a
/// stored matrix always has sorted, unique column indices per row and finite
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate positions are summed (the sum follows insertion order, so
    /// repeated assembly is bitwise reproducible); entries that are exactly
    /// zero after summing are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self, LinAlgError> {
        for &(r, c, v) in &triplets {
            if r >= nrows || c >= ncols {
                return Err(LinAlgError::Shape(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            if !v.is_finite() {
                return Err(LinAlgError::NonFinite("matrix triplet"));
            }
        }
        // Stable sort keeps duplicate positions in insertion order.
        triplets.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows_seen = Vec::with_capacity(triplets.len());
        for &(r, c, v) in &triplets {
            if let (Some(&last_c), Some(&last_r)) = (col_idx.last(), rows_seen.last()) {
                if last_r == r && last_c == c {
                    let last = values.last_mut().expect("value for last entry");
                    *last += v;
                    continue;
                }
            }
            rows_seen.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // Drop zeros produced by cancellation, then count entries per row.
        let mut kept_cols = Vec::with_capacity(col_idx.len());
        let mut kept_vals = Vec::with_capacity(values.len());
        for ((&r, &c), &v) in rows_seen.iter().zip(&col_idx).zip(&values) {
            if v != T::zero() {
                row_ptr[r + 1] += 1;
                kept_cols.push(c);
                kept_vals.push(v);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: kept_cols,
            values: kept_vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        let triplets = (0..n).map(|i| (i, i, T::one())).collect();
        Self::from_triplets(n, n, triplets).expect("identity triplets are valid")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    /// Iterates all stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Value at `(r, c)`, zero if the position is not stored.
    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    /// Matrix-vector product `A x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "apply: length mismatch");
        let mut out = vec![T::zero(); self.nrows];
        for (r, slot) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut sum = T::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                sum += v * x[c];
            }
            *slot = sum;
        }
        out
    }

    /// Transposed product `Aᵀ y` without materializing the transpose.
    pub fn apply_transpose(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.nrows, "apply_transpose: length mismatch");
        let mut out = vec![T::zero(); self.ncols];
        for (r, &yr) in y.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
            .expect("transposed triplets are valid")
    }

    /// `s · A`.
    pub fn scaled(&self, s: T) -> Self {
        assert!(s.is_finite(), "scale factor must be finite");
        let triplets = self.entries().map(|(r, c, v)| (r, c, v * s)).collect();
        Self::from_triplets(self.nrows, self.ncols, triplets).expect("scaled triplets are valid")
    }

    /// `A + s·I` for square `A`.
    pub fn shift_diagonal(&self, s: T) -> Self {
        assert_eq!(self.nrows, self.ncols, "shift_diagonal needs a square matrix");
        let mut triplets: Vec<_> = self.entries().collect();
        triplets.extend((0..self.nrows).map(|i| (i, i, s)));
        Self::from_triplets(self.nrows, self.ncols, triplets).expect("shifted triplets are valid")
    }

    /// Dense row-major copy; intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.nrows * self.ncols];
        for (r, c, v) in self.entries() {
            out[r * self.ncols + c] = v;
        }
        out
    }

    pub fn column_sums(&self) -> Vec<T> {
        self.apply_transpose(&vec![T::one(); self.nrows])
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.apply(&vec![T::one(); self.ncols])
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// Operator ∞-norm, the largest absolute row sum.
    pub fn norm_inf(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.nrows {
            let (_, vals) = self.row(r);
            let mut sum = T::zero();
            for &v in vals {
                sum += v.abs();
            }
            worst = worst.max(sum);
        }
        worst
    }

    /// Operator 1-norm, the largest absolute column sum.
    pub fn norm_one(&self) -> T {
        let mut sums = vec![T::zero(); self.ncols];
        for (_, c, v) in self.entries() {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(T::zero(), T::max)
    }
}

/// Euclidean norm of a residual vector.
pub fn residual_norm2<T: Real>(v: &[T]) -> T {
    let mut sum = T::zero();
    for &x in v {
        sum += x * x;
    }
    sum.sqrt()
}

/// Residual `b − A(x_hi + x_lo)` for a double-word solution, with every
/// head product split by a fused multiply–add and the running sums
/// compensated (Neumaier), so each entry is accurate to
/// O(ε²·Σⱼ|aᵢⱼ||xⱼ|) instead of the O(ε·Σⱼ|aᵢⱼ||xⱼ|) of a plain evaluation.
///
/// Refinement corrects a solve only down to the accuracy of the residual it
/// sees: a working-precision residual pins the forward error at κ(A)·ε,
/// this one moves the limit to O(ε²·κ), below one ulp of the solution for
/// every system that passes the growth guard.
fn residual_double_word<T: Real>(a: &SparseMatrix<T>, hi: &[T], lo: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.nrows()];
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        let mut s = b[r];
        let mut c = T::zero();
        for (&j, &v) in cols.iter().zip(vals) {
            // v·hiⱼ = p + e exactly.
            let p = v * hi[j];
            let e = v.mul_add(hi[j], -p);
            // s + (−p) = t + err exactly (branch-free two-sum).
            let y = -p;
            let t = s + y;
            let z = t - s;
            c += (s - (t - z)) + (y - z) - e;
            // The tail products are already O(ε) small; plain rounding of
            // them only perturbs at O(ε²).
            c -= v * lo[j];
            s = t;
        }
        out[r] = s + c;
    }
    out
}

/// Adds the correction `d` into the double-word value `(hi, lo)` and
/// renormalizes so that `hi = fl(hi + lo)` afterwards.
#[inline]
fn double_word_add<T: Real>(hi: T, lo: T, d: T) -> (T, T) {
    // hi + d = s + err exactly (branch-free two-sum).
    let s = hi + d;
    let z = s - hi;
    let err = (hi - (s - z)) + (d - z);
    let tail = lo + err;
    let new_hi = s + tail;
    let new_lo = tail - (new_hi - s);
    (new_hi, new_lo)
}

/// Dot product.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        sum += x * y;
    }
    sum
}

/// Default relative residual tolerance for square solves: `1e-12` at `f64`
/// accuracy, loosened in proportion to the machine epsilon otherwise.
pub fn default_square_tol<T: Real>() -> T {
    real::<T>(1e-12).max(T::epsilon() * real(50.0))
}

/// Default relative gradient tolerance for least-squares solves: `1e-10` at
/// `f64` accuracy, loosened in proportion to the machine epsilon otherwise.
pub fn default_ls_tol<T: Real>() -> T {
    real::<T>(1e-10).max(T::epsilon() * real(500.0))
}

/// Solves `A x = b` with the default tolerance of [`default_square_tol`].
pub fn solve_square<T: Real>(a: &SparseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinAlgError> {
    solve_square_tol(a, b, default_square_tol())
}

/// Solves the square system `A x = b` by sparse LU with iterative
/// refinement until the normwise backward error
/// `‖b − A x‖₂ / (‖A‖_∞ ‖x‖₂ + ‖b‖₂)` drops below `rtol`.
///
/// A small backward error alone does not rule out a (near-)singular matrix,
/// because LU with substitution is backward stable even then; the driver
/// additionally rejects solutions whose growth `‖A‖_∞‖x‖₂ / ‖b‖₂` exceeds
/// `0.1/ε`, which no system solvable at the working precision can reach.
pub fn solve_square_tol<T: Real>(
    a: &SparseMatrix<T>,
    b: &[T],
    rtol: T,
) -> Result<Vec<T>, LinAlgError> {
    if a.nrows() != a.ncols() {
        return Err(LinAlgError::Shape(format!(
            "square solve on {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(LinAlgError::Shape(format!(
            "rhs length {} does not match order {}",
            b.len(),
            a.nrows()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LinAlgError::NonFinite("right-hand side"));
    }
    let lu = SparseLu::factor(a)?;
    refined_square_solve(&lu, a, b, rtol)
}

/// Refined solve reusing an existing factorization of `a`; see
/// [`solve_square_tol`] for the acceptance criterion.
///
/// The solution is carried as a double word `(hi, lo)`, residuals are
/// evaluated with [`residual_double_word`], and at least one correction is
/// applied even when the first substitution already meets the tolerance: LU
/// substitution is backward stable, so the acceptance test alone cannot see
/// the κ(A)·ε forward error it leaves behind. The refined double word
/// converges to the exact solution well below one ulp, so the returned
/// head is the correctly rounded solution — in particular, structurally
/// identical systems (e.g. mirror images of each other under a grid
/// symmetry) round to bitwise identical results instead of diverging by a
/// pivot-order–dependent κ(A)·ε.
pub fn refined_square_solve<T: Real>(
    lu: &SparseLu<T>,
    a: &SparseMatrix<T>,
    b: &[T],
    rtol: T,
) -> Result<Vec<T>, LinAlgError> {
    let norm_a = a.norm_inf();
    let norm_b = residual_norm2(b);
    let growth_guard = real::<T>(0.1) / T::epsilon();
    let mut hi = lu.solve(b);
    let mut lo = vec![T::zero(); hi.len()];
    let mut refined = false;
    for sweep in 0..=5 {
        let r = residual_double_word(a, &hi, &lo, b);
        if !r.iter().all(|v| v.is_finite()) {
            return Err(LinAlgError::SingularSystem);
        }
        let scale = norm_a * residual_norm2(&hi);
        if refined && residual_norm2(&r) <= rtol * (scale + norm_b) {
            if scale > growth_guard * norm_b {
                return Err(LinAlgError::SingularSystem);
            }
            return Ok(hi);
        }
        if sweep == 5 {
            break;
        }
        let dx = lu.solve(&r);
        for ((h, l), d) in hi.iter_mut().zip(lo.iter_mut()).zip(dx) {
            (*h, *l) = double_word_add(*h, *l, d);
        }
        refined = true;
    }
    Err(LinAlgError::SingularSystem)
}

/// Solves `min_x ‖A x − b‖₂` with the default tolerance of
/// [`default_ls_tol`].
pub fn solve_least_squares<T: Real>(a: &SparseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinAlgError> {
    solve_least_squares_tol(a, b, default_ls_tol())
}

/// Solves the full-rank least-squares problem `min_x ‖A x − b‖₂` for
/// `A ∈ R^{m×n}`, `m ≥ n`, until the normal-equation residual satisfies
/// `‖Aᵀ(b − A x)‖₂ ≤ rtol · (‖Aᵀ b‖₂ + ‖A‖₁‖A‖_∞‖x‖₂)`.
///
/// The normal system is kept sparse by peeling dense rows: a row with at
/// least `max(16, n/8)` entries is not multiplied into `SᵀS` (which would
/// fill it completely) but coupled through a bordered system
/// `[[SᵀS, C], [Cᵀ, −I]]`, which is algebraically equivalent to
/// `AᵀA x = Aᵀ b`. Corrected semi-normal refinement recovers the accuracy
/// lost by squaring the condition number.
pub fn solve_least_squares_tol<T: Real>(
    a: &SparseMatrix<T>,
    b: &[T],
    rtol: T,
) -> Result<Vec<T>, LinAlgError> {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        return Err(LinAlgError::Shape(format!(
            "least squares needs nrows >= ncols, got {m}x{n}"
        )));
    }
    if b.len() != m {
        return Err(LinAlgError::Shape(format!(
            "rhs length {} does not match nrows {m}",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LinAlgError::NonFinite("right-hand side"));
    }

    let dense_threshold = 16.max(n / 8);
    let dense_rows: Vec<usize> = (0..m).filter(|&r| a.row_nnz(r) >= dense_threshold).collect();
    let is_dense = {
        let mut mask = vec![false; m];
        for &r in &dense_rows {
            mask[r] = true;
        }
        mask
    };
    let k = dense_rows.len();

    // Bordered normal matrix B = [[SᵀS, C], [Cᵀ, −I_k]].
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();
    for (r, &dense) in is_dense.iter().enumerate() {
        if dense {
            continue;
        }
        let (cols, vals) = a.row(r);
        for (&ci, &vi) in cols.iter().zip(vals) {
            for (&cj, &vj) in cols.iter().zip(vals) {
                triplets.push((ci, cj, vi * vj));
            }
        }
    }
    for (t, &r) in dense_rows.iter().enumerate() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            triplets.push((c, n + t, v));
            triplets.push((n + t, c, v));
        }
        triplets.push((n + t, n + t, -T::one()));
    }
    let bordered = SparseMatrix::from_triplets(n + k, n + k, triplets)?;
    let lu = SparseLu::factor(&bordered).map_err(|_| LinAlgError::RankDeficient)?;

    let solve_normal = |g: &[T]| -> Vec<T> {
        let mut rhs = vec![T::zero(); n + k];
        rhs[..n].copy_from_slice(g);
        let mut z = lu.solve(&rhs);
        z.truncate(n);
        z
    };

    let atb = a.apply_transpose(b);
    let norm_atb = residual_norm2(&atb);
    // ‖Aᵀ(b − Ax)‖ is compared against its own rounding noise, which scales
    // with ‖AᵀA‖‖x‖ ≤ ‖A‖₁‖A‖_∞‖x‖ on top of the ‖Aᵀb‖ term.
    let norm_ata = a.norm_one() * a.norm_inf();
    let mut x = solve_normal(&atb);

    // Corrected semi-normal refinement on the true residual. Each sweep
    // shrinks the solution error by roughly u·κ(A)², so the loop keeps
    // polishing while the gradient still improves geometrically instead of
    // stopping at the acceptance bar, which only bounds the gradient by its
    // own evaluation noise and cannot certify the step's forward error.
    let mut best_x = x.clone();
    let mut best_grad = T::infinity();
    let mut best_target = T::zero();
    let mut previous_grad = T::infinity();
    for _ in 0..8 {
        let ax = a.apply(&x);
        let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
        let grad = a.apply_transpose(&r);
        let grad_norm = residual_norm2(&grad);
        if !grad_norm.is_finite() {
            break;
        }
        let target = rtol * (norm_atb + norm_ata * residual_norm2(&x));
        if grad_norm < best_grad {
            best_grad = grad_norm;
            best_target = target;
            best_x.copy_from_slice(&x);
        }
        if grad_norm > previous_grad * real::<T>(0.5) {
            break;
        }
        previous_grad = grad_norm;
        let d = solve_normal(&grad);
        for (xi, di) in x.iter_mut().zip(d) {
            *xi += di;
        }
    }
    if best_grad <= best_target {
        Ok(best_x)
    } else {
        Err(LinAlgError::RankDeficient)
    }
}
