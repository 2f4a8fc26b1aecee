//! Sparse LU factorization with partial pivoting.
//!
//! Left-looking, column-oriented factorization in the style of Gilbert and
//! Peierls: for each column, a depth-first search over the graph of the
//! already-computed `L` finds the nonzero pattern of the sparse triangular
//! solve, the solve runs in topological order, and the largest remaining
//! entry of the column becomes the pivot row. The cost is proportional to
//! the number of floating-point operations performed, which keeps banded
//! systems (optionally bordered by dense rows and columns) fast.

use super::{LinAlgError, SparseMatrix};
use crate::scalar::Real;

const UNPIVOTED: usize = usize::MAX;

/// LU factorization `P A = L U` of a square sparse matrix.
pub struct SparseLu<T> {
    n: usize,
    /// Strictly lower part of column `k` of `L`, keyed by original row index.
    l_cols: Vec<Vec<(usize, T)>>,
    /// Above-diagonal part of column `k` of `U`, keyed by pivot position.
    u_cols: Vec<Vec<(usize, T)>>,
    u_diag: Vec<T>,
    /// Original row chosen as the pivot of elimination step `k`.
    row_of_pivot: Vec<usize>,
}

impl<T: Real> SparseLu<T> {
    /// Factors a square matrix. Fails with [`LinAlgError::SingularSystem`]
    /// when a pivot column has no entry distinguishable from zero.
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self, LinAlgError> {
        if a.nrows() != a.ncols() {
            return Err(LinAlgError::Shape(format!(
                "LU factorization on {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        // Hard-zero guard only: near-singular factors are caught by the
        // residual checks of the solve drivers, not by a pivot threshold.
        let pivot_floor = a.max_abs() * T::epsilon();

        // Compressed sparse column copy of `a`.
        let mut col_ptr = vec![0usize; n + 1];
        for (_, c, _) in a.entries() {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut col_rows = vec![0usize; a.nnz()];
        let mut col_vals = vec![T::zero(); a.nnz()];
        let mut next = col_ptr.clone();
        for (r, c, v) in a.entries() {
            col_rows[next[c]] = r;
            col_vals[next[c]] = v;
            next[c] += 1;
        }

        let mut l_cols: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        let mut u_cols: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        let mut u_diag = vec![T::zero(); n];
        let mut row_of_pivot = vec![0usize; n];
        // pivot_of_row[r] = elimination step that chose original row r.
        let mut pivot_of_row = vec![UNPIVOTED; n];

        // Workspaces: dense accumulator, visit stamps, DFS stack, topological
        // node list (reverse post-order).
        let mut x = vec![T::zero(); n];
        let mut stamp = vec![usize::MAX; n];
        let mut topo: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for j in 0..n {
            topo.clear();
            let a_col = col_ptr[j]..col_ptr[j + 1];

            // Reachable set of the column pattern in the graph of L.
            for &start in &col_rows[a_col.clone()] {
                if stamp[start] == j {
                    continue;
                }
                stamp[start] = j;
                stack.push((start, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (node, mut pos) = stack[top];
                    let children: &[(usize, T)] = match pivot_of_row[node] {
                        UNPIVOTED => &[],
                        k => &l_cols[k],
                    };
                    let mut descended = false;
                    while pos < children.len() {
                        let child = children[pos].0;
                        pos += 1;
                        if stamp[child] != j {
                            stamp[child] = j;
                            stack[top].1 = pos;
                            stack.push((child, 0));
                            descended = true;
                            break;
                        }
                    }
                    if !descended {
                        stack.pop();
                        topo.push(node);
                    }
                }
            }

            // Sparse triangular solve in topological order.
            for &t in &topo {
                x[t] = T::zero();
            }
            for idx in a_col.clone() {
                x[col_rows[idx]] = col_vals[idx];
            }
            for &t in topo.iter().rev() {
                let k = pivot_of_row[t];
                if k == UNPIVOTED {
                    continue;
                }
                let xt = x[t];
                if xt == T::zero() {
                    continue;
                }
                for &(r, lv) in &l_cols[k] {
                    x[r] -= lv * xt;
                }
            }

            // Partial pivoting over the rows not yet chosen as pivots.
            let mut pivot_row = UNPIVOTED;
            let mut pivot_abs = T::zero();
            for &t in &topo {
                if pivot_of_row[t] == UNPIVOTED && x[t].abs() >= pivot_abs {
                    pivot_abs = x[t].abs();
                    pivot_row = t;
                }
            }
            if pivot_row == UNPIVOTED || pivot_abs <= pivot_floor || !pivot_abs.is_finite() {
                return Err(LinAlgError::SingularSystem);
            }
            let pivot_value = x[pivot_row];

            let mut l_col = Vec::new();
            let mut u_col = Vec::new();
            for &t in &topo {
                match pivot_of_row[t] {
                    UNPIVOTED => {
                        if t != pivot_row && x[t] != T::zero() {
                            l_col.push((t, x[t] / pivot_value));
                        }
                    }
                    k => {
                        if x[t] != T::zero() {
                            u_col.push((k, x[t]));
                        }
                    }
                }
            }
            l_cols.push(l_col);
            u_cols.push(u_col);
            u_diag[j] = pivot_value;
            pivot_of_row[pivot_row] = j;
            row_of_pivot[j] = pivot_row;
        }

        Ok(Self {
            n,
            l_cols,
            u_cols,
            u_diag,
            row_of_pivot,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` using the stored factors (no refinement).
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "solve: rhs length mismatch");
        // Forward substitution L y = P b, accumulating in original row order.
        let mut work = b.to_vec();
        let mut y = vec![T::zero(); self.n];
        for k in 0..self.n {
            let yk = work[self.row_of_pivot[k]];
            y[k] = yk;
            if yk != T::zero() {
                for &(r, lv) in &self.l_cols[k] {
                    work[r] -= lv * yk;
                }
            }
        }
        // Backward substitution U x = y in pivot order.
        for k in (0..self.n).rev() {
            let xk = y[k] / self.u_diag[k];
            y[k] = xk;
            if xk != T::zero() {
                for &(i, uv) in &self.u_cols[k] {
                    y[i] -= uv * xk;
                }
            }
        }
        y
    }
}
