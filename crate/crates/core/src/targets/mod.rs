//! Potential energies `U` with analytic gradients and declared constants.

mod estimate;
mod gaussian;
mod mixture;
mod rosenbrock;
pub mod suite;

pub use estimate::{estimate_constants, ConstantEstimateOptions};
pub use gaussian::{FreeParticle, Gaussian};
pub use mixture::{log_sum_exp, MixtureKind, PlanarMixture, TwoGaussianMixture1d};
pub use rosenbrock::Rosenbrock;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::Scalar;

/// Smoothness and convexity data for a potential.
///
/// `convexity_radius` is the radius beyond which the two-point strong
/// convexity inequality `(x-y)·(∇U(x)-∇U(y)) >= K|x-y|²` is declared to hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothnessConstants<S> {
    pub lipschitz_grad: S,
    pub convexity: S,
    pub convexity_radius: S,
    /// `U` has a local minimum at the origin with `U(0) = 0`.
    pub centered: bool,
    /// Values come from a numerical estimate rather than analysis.
    pub estimated: bool,
}

impl<S: Scalar> SmoothnessConstants<S> {
    pub fn new(lipschitz_grad: S, convexity: S, convexity_radius: S) -> Result<Self> {
        if !(lipschitz_grad > S::zero()) || !(convexity > S::zero()) {
            return invalid("L and K must be positive");
        }
        if convexity_radius < S::zero() {
            return invalid("convexity radius must be nonnegative");
        }
        if convexity > lipschitz_grad {
            return invalid(format!(
                "convexity K = {convexity} exceeds gradient Lipschitz constant L = {lipschitz_grad}"
            ));
        }
        Ok(Self {
            lipschitz_grad,
            convexity,
            convexity_radius,
            centered: true,
            estimated: false,
        })
    }

    pub fn not_centered(mut self) -> Self {
        self.centered = false;
        self
    }

    pub fn as_estimate(mut self) -> Self {
        self.estimated = true;
        self
    }
}

/// Confinement data backing a Lyapunov drift condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LyapunovData<S> {
    /// `x·∇U(x) >= κ|x|² - C`
    Quadratic { kappa: S, c: S },
    /// `x·∇U(x) >= κ|x| - C` and `|∇U(x)| <= Q`
    Exponential { kappa: S, c: S, q: S },
}

impl<S: Scalar> LyapunovData<S> {
    /// Checks the declared confinement inequality at `x` with absolute slack.
    pub fn holds_at(&self, x: &[S], grad: &[S], slack: S) -> bool {
        let r = crate::vector::norm(x);
        let radial = crate::vector::dot(x, grad);
        match *self {
            Self::Quadratic { kappa, c } => radial >= kappa * r * r - c - slack,
            Self::Exponential { kappa, c, q } => {
                radial >= kappa * r - c - slack && crate::vector::norm(grad) <= q + slack
            }
        }
    }
}

/// A potential energy on `R^d`. Implementors are immutable and shareable across threads.
pub trait Target<S: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn potential(&self, x: &[S]) -> S;

    /// Writes `∇U(x)` into `grad` (same length as `x`).
    fn gradient(&self, x: &[S], grad: &mut [S]);

    fn constants(&self) -> Option<SmoothnessConstants<S>> {
        None
    }

    fn lyapunov(&self) -> Option<LyapunovData<S>> {
        None
    }

    /// Diagonal of `Σ⁻¹` when `U(x) = ½ xᵀΣ⁻¹x` with diagonal `Σ`; enables the closed-form flow.
    fn diagonal_precision(&self) -> Option<&[S]> {
        None
    }

    fn gradient_vec(&self, x: &[S]) -> Vec<S> {
        let mut g = vec![S::zero(); x.len()];
        self.gradient(x, &mut g);
        g
    }
}

impl<S: Scalar, T: Target<S> + ?Sized> Target<S> for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, x: &[S]) -> S {
        (**self).potential(x)
    }
    fn gradient(&self, x: &[S], grad: &mut [S]) {
        (**self).gradient(x, grad)
    }
    fn constants(&self) -> Option<SmoothnessConstants<S>> {
        (**self).constants()
    }
    fn lyapunov(&self) -> Option<LyapunovData<S>> {
        (**self).lyapunov()
    }
    fn diagonal_precision(&self) -> Option<&[S]> {
        (**self).diagonal_precision()
    }
}
