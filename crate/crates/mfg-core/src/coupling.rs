//! Local coupling cost `F(m)` between the density and the value function.

use std::fmt;
use std::sync::Arc;

use crate::field::ScalarField;
use crate::scalar::{real, Real};

/// Pointwise coupling `F` together with its derivative `F′`, used by the
/// fixed-point residual and the Newton linearization.
#[derive(Clone)]
pub struct Coupling<T> {
    name: String,
    f: Arc<dyn Fn(T) -> T + Send + Sync>,
    df: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> Coupling<T> {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    /// `F(m) = m²`, the coupling used by the reference experiments.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |m: T| m * m, |m: T| real::<T>(2.0) * m)
    }

    /// `F ≡ 0` (no coupling).
    pub fn zero() -> Self {
        Self::new("zero", |_| T::zero(), |_| T::zero())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, m: T) -> T {
        (self.f)(m)
    }

    #[inline]
    pub fn derivative(&self, m: T) -> T {
        (self.df)(m)
    }

    /// Applies `F` entrywise to a density field.
    pub fn apply(&self, m: &ScalarField<T>) -> ScalarField<T> {
        m.map(|v| self.eval(v))
    }
}

impl<T> fmt::Debug for Coupling<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coupling").field("name", &self.name).finish()
    }
}
