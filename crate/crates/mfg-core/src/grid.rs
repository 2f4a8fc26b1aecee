//! Uniform periodic grids on the unit torus and uniform time grids.
//!
//! A [`PeriodicGrid`] discretizes `[0,1)^d` (`d = 1, 2`) with `I` nodes per
//! dimension at coordinates `x_i = i·h`, `h = 1/I`. Nodes are addressed by a
//! single flat index; in 2D the layout is row-major, `node = i + I·j` for
//! coordinates `(x_i, x_j)`.

use crate::scalar::{real_from_usize, Real};

/// Periodic wrap `[i] = (i + I) mod I`, defined for every signed `i`.
#[inline]
pub fn wrap_index(i: isize, nodes: usize) -> usize {
    debug_assert!(nodes >= 1);
    i.rem_euclid(nodes as isize) as usize
}

/// Uniform grid with `I` nodes per dimension on the torus `[0,1)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid {
    dim: usize,
    nodes_per_dim: usize,
}

impl PeriodicGrid {
    /// Creates a grid. Requires `dim ∈ {1, 2}` and at least 3 nodes per
    /// dimension so the three-point stencils reference distinct neighbors.
    pub fn new(dim: usize, nodes_per_dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
        assert!(nodes_per_dim >= 3, "need at least 3 nodes per dimension");
        Self { dim, nodes_per_dim }
    }

    /// 1D grid with `nodes` nodes.
    pub fn line(nodes: usize) -> Self {
        Self::new(1, nodes)
    }

    /// 2D grid with `nodes × nodes` nodes.
    pub fn square(nodes: usize) -> Self {
        Self::new(2, nodes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    /// Total number of nodes `I^d`.
    pub fn total_nodes(&self) -> usize {
        self.nodes_per_dim.pow(self.dim as u32)
    }

    /// Mesh width `h = 1/I`.
    pub fn spacing<T: Real>(&self) -> T {
        T::one() / real_from_usize(self.nodes_per_dim)
    }

    /// Quadrature weight of one node, `h^d`.
    pub fn cell_volume<T: Real>(&self) -> T {
        let h: T = self.spacing();
        match self.dim {
            1 => h,
            _ => h * h,
        }
    }

    /// Flat index of the node with per-dimension indices `(i, j)`.
    /// In 1D `j` must be 0.
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nodes_per_dim);
        debug_assert!(if self.dim == 1 { j == 0 } else { j < self.nodes_per_dim });
        i + self.nodes_per_dim * j
    }

    /// Per-dimension indices `(i, j)` of a flat node index; `j = 0` in 1D.
    pub fn split_index(&self, node: usize) -> (usize, usize) {
        debug_assert!(node < self.total_nodes());
        if self.dim == 1 {
            (node, 0)
        } else {
            (node % self.nodes_per_dim, node / self.nodes_per_dim)
        }
    }

    /// Coordinates of a node; the second entry is 0 in 1D.
    pub fn coords<T: Real>(&self, node: usize) -> [T; 2] {
        let (i, j) = self.split_index(node);
        let h: T = self.spacing();
        [real_from_usize::<T>(i) * h, real_from_usize::<T>(j) * h]
    }

    /// Flat index of the periodic neighbor `step` cells away along `axis`.
    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> usize {
        debug_assert!(axis < self.dim);
        let (i, j) = self.split_index(node);
        let n = self.nodes_per_dim;
        match axis {
            0 => self.node_index(wrap_index(i as isize + step, n), j),
            _ => self.node_index(i, wrap_index(j as isize + step, n)),
        }
    }
}

/// Uniform time grid on `[0, T]` with `N` implicit Euler steps of size `T/N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    /// Requires `horizon > 0` and at least one step.
    pub fn new(horizon: T, steps: usize) -> Self {
        assert!(horizon > T::zero(), "horizon must be positive");
        assert!(steps >= 1, "need at least one time step");
        Self { horizon, steps }
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Number of steps `N`; there are `N + 1` time nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.horizon / real_from_usize(self.steps)
    }

    /// Time node `t_n = n·dt` for `n = 0..=N`.
    pub fn node_time(&self, n: usize) -> T {
        debug_assert!(n <= self.steps);
        self.dt() * real_from_usize(n)
    }
}
