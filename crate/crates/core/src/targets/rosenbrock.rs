use super::Target;
use crate::Scalar;

/// Banana-shaped potential `U(x, y) = (1 - x)² + 10 (y - x²)²`.
///
/// The Hessian is unbounded, so no smoothness constants are declared.
#[derive(Clone, Copy, Debug, Default)]
pub struct Rosenbrock;

impl<S: Scalar> Target<S> for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        2
    }

    fn potential(&self, x: &[S]) -> S {
        let a = S::one() - x[0];
        let b = x[1] - x[0] * x[0];
        a * a + S::lit(10.0) * b * b
    }

    fn gradient(&self, x: &[S], grad: &mut [S]) {
        let b = x[1] - x[0] * x[0];
        grad[0] = S::lit(-2.0) * (S::one() - x[0]) - S::lit(40.0) * x[0] * b;
        grad[1] = S::lit(20.0) * b;
    }
}
