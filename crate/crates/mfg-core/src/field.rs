//! Node-indexed fields on a periodic grid.
//!
//! [`ScalarField`] stores one value per grid node. [`TwoSidedField`] stores a
//! left and a right component per node and dimension; it represents both
//! two-sided upwind gradients `(D_L u, D_R u)` and feedback policies
//! `(Q_L, Q_R)`, which share that layout.

use crate::grid::PeriodicGrid;
use crate::scalar::Real;

/// One scalar value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: PeriodicGrid,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn constant(grid: PeriodicGrid, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.total_nodes()],
        }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Wraps an existing value vector; its length must match the grid.
    pub fn from_values(grid: PeriodicGrid, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.total_nodes(), "field length mismatch");
        Self { grid, values }
    }

    /// Samples `f` at the node coordinates. In 1D the second coordinate
    /// passed to `f` is always 0.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..grid.total_nodes()).map(|n| f(grid.coords(n))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, node: usize) -> T {
        self.values[node]
    }

    #[inline]
    pub fn set(&mut self, node: usize, value: T) {
        self.values[node] = value;
    }

    /// Rectangular quadrature `∫♯ f = h^d Σ_i f_i`.
    pub fn quadrature(&self) -> T {
        let mut sum = T::zero();
        for &v in &self.values {
            sum += v;
        }
        sum * self.grid.cell_volume()
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a.max(v.abs()))
    }

    /// Applies `f` entrywise.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Quadrature `∫♯ f` as a free function.
pub fn quadrature<T: Real>(f: &ScalarField<T>) -> T {
    f.quadrature()
}

/// Discrete `L²` distance `(∫♯ |a − b|²)^{1/2}` of two fields on one grid.
pub fn discrete_l2_distance<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> T {
    assert_eq!(a.grid(), b.grid(), "fields live on different grids");
    let mut sum = T::zero();
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let d = x - y;
        sum += d * d;
    }
    (sum * a.grid().cell_volume()).sqrt()
}

/// A left and a right component per node and dimension.
///
/// Storage is node-major: the components of node `n` occupy the slots
/// `n·2d + 2·axis` (left) and `n·2d + 2·axis + 1` (right).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSidedField<T> {
    grid: PeriodicGrid,
    components: Vec<T>,
}

/// Feedback policy `(Q_L, Q_R)` per node and dimension.
pub type PolicyField<T> = TwoSidedField<T>;

/// Two-sided upwind gradient `(D_L u, D_R u)` per node and dimension.
pub type TwoSidedGradient<T> = TwoSidedField<T>;

impl<T: Real> TwoSidedField<T> {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            components: vec![T::zero(); grid.total_nodes() * 2 * grid.dim()],
        }
    }

    /// Wraps a raw component vector in the node-major layout.
    pub fn from_components(grid: PeriodicGrid, components: Vec<T>) -> Self {
        assert_eq!(
            components.len(),
            grid.total_nodes() * 2 * grid.dim(),
            "component length mismatch"
        );
        Self { grid, components }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    /// Number of stored components per node, `2d`.
    pub fn components_per_node(&self) -> usize {
        2 * self.grid.dim()
    }

    #[inline]
    fn slot(&self, node: usize, axis: usize) -> usize {
        debug_assert!(axis < self.grid.dim());
        (node * self.grid.dim() + axis) * 2
    }

    #[inline]
    pub fn left(&self, node: usize, axis: usize) -> T {
        self.components[self.slot(node, axis)]
    }

    #[inline]
    pub fn right(&self, node: usize, axis: usize) -> T {
        self.components[self.slot(node, axis) + 1]
    }

    #[inline]
    pub fn set_left(&mut self, node: usize, axis: usize, value: T) {
        let s = self.slot(node, axis);
        self.components[s] = value;
    }

    #[inline]
    pub fn set_right(&mut self, node: usize, axis: usize, value: T) {
        let s = self.slot(node, axis);
        self.components[s + 1] = value;
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [T] {
        &mut self.components
    }

    /// Euclidean norm of the full `2d`-component vector at one node.
    pub fn node_norm(&self, node: usize) -> T {
        let d = self.grid.dim();
        let base = node * 2 * d;
        let mut sum = T::zero();
        for k in 0..2 * d {
            let c = self.components[base + k];
            sum += c * c;
        }
        sum.sqrt()
    }

    /// Largest node norm over the grid.
    pub fn max_node_norm(&self) -> T {
        (0..self.grid.total_nodes()).fold(T::zero(), |a, n| a.max(self.node_norm(n)))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|v| v.is_finite())
    }
}
