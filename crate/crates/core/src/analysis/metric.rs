//! The concave distance `f` and the semimetric `ρ_ε`, with the parameter
//! choices used by the contraction results.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::vector::distance;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricParams<S> {
    pub a: S,
    pub r1: S,
}

impl<S: Scalar> MetricParams<S> {
    pub fn new(a: S, r1: S) -> Result<Self> {
        if !(a > S::zero()) || !(r1 > S::zero()) || !a.is_finite() || !r1.is_finite() {
            return invalid(format!("metric needs a > 0 and R1 > 0, got a={a}, R1={r1}"));
        }
        Ok(Self { a, r1 })
    }

    pub fn f(&self, r: S) -> S {
        f_metric(r, self)
    }
}

/// `f(r) = ∫_0^r exp(-a min(s, R₁)) ds` in closed form.
pub fn f_metric<S: Scalar>(r: S, p: &MetricParams<S>) -> S {
    let (a, r1) = (p.a, p.r1);
    if r <= r1 {
        -(-a * r).exp_m1() / a
    } else {
        -(-a * r1).exp_m1() / a + (-a * r1).exp() * (r - r1)
    }
}

pub struct SemimetricParams<S, F> {
    pub metric: MetricParams<S>,
    pub epsilon: S,
    /// Cap on the distance inside `f` (twice the convexity radius).
    pub cap: S,
    pub lyapunov: F,
}

impl<S: Scalar, F: Fn(&[S]) -> S> SemimetricParams<S, F> {
    pub fn new(metric: MetricParams<S>, epsilon: S, cap: S, lyapunov: F) -> Result<Self> {
        if !(epsilon > S::zero()) {
            return invalid(format!("epsilon must be positive, got {epsilon}"));
        }
        if !(cap > S::zero()) {
            return invalid(format!("cap must be positive, got {cap}"));
        }
        Ok(Self {
            metric,
            epsilon,
            cap,
            lyapunov,
        })
    }
}

/// `ρ_ε(x, y) = sqrt(f(min(|x-y|, cap)) · (1 + εΨ(x) + εΨ(y)))`.
pub fn rho_eps<S: Scalar, F: Fn(&[S]) -> S>(x: &[S], y: &[S], p: &SemimetricParams<S, F>) -> S {
    let r = distance(x, y).min(p.cap);
    let weight = S::one() + p.epsilon * (p.lyapunov)(x) + p.epsilon * (p.lyapunov)(y);
    (f_metric(r, &p.metric) * weight).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingParams<S> {
    pub gamma: S,
    pub a: S,
    pub r1: S,
    pub epsilon: Option<S>,
}

impl<S: Scalar> CouplingParams<S> {
    pub fn metric(&self) -> MetricParams<S> {
        MetricParams {
            a: self.a,
            r1: self.r1,
        }
    }

    pub fn epsilon(&self) -> Result<S> {
        match self.epsilon {
            Some(e) => Ok(e),
            None => invalid("epsilon requires the drift constant alpha"),
        }
    }
}

/// `γ = min(1/T, 1/(4R))`, `a = 1/T`, `R₁ = 5(R+T)/2`, and, given `α`,
/// `ε = e^{-2R/T} / (40α)`.
pub fn coupling_params<S: Scalar>(
    duration: S,
    radius: S,
    alpha: Option<S>,
) -> Result<CouplingParams<S>> {
    if !(duration > S::zero()) || !duration.is_finite() {
        return invalid(format!("T must be positive, got {duration}"));
    }
    if !(radius >= S::zero()) || !radius.is_finite() {
        return invalid(format!("R must be nonnegative, got {radius}"));
    }
    let inv_t = duration.recip();
    let gamma = if radius > S::zero() {
        inv_t.min((S::lit(4.0) * radius).recip())
    } else {
        inv_t
    };
    let epsilon = match alpha {
        Some(al) if !(al > S::zero()) => {
            return invalid(format!("alpha must be positive, got {al}"))
        }
        Some(al) => Some((-S::lit(2.0) * radius / duration).exp() / (S::lit(40.0) * al)),
        None => None,
    };
    Ok(CouplingParams {
        gamma,
        a: inv_t,
        r1: S::lit(2.5) * (radius + duration),
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn adaptive_simpson(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
        fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
        }
        fn rec(g: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (l, r) = (simpson(g, a, m), simpson(g, m, b));
            if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
                return l + r + (l + r - whole) / 15.0;
            }
            rec(g, a, m, l, 0.5 * tol, depth - 1) + rec(g, m, b, r, 0.5 * tol, depth - 1)
        }
        if hi <= lo {
            return 0.0;
        }
        rec(g, lo, hi, simpson(g, lo, hi), tol, 50)
    }

    fn quad_oracle(r: f64, a: f64, r1: f64) -> f64 {
        let g = |s: f64| (-a * s.min(r1)).exp();
        adaptive_simpson(&g, 0.0, r.min(r1), 1e-15) + adaptive_simpson(&g, r1, r.max(r1), 1e-15)
    }

    #[test]
    fn reference_values() {
        let p = MetricParams::new(1.0, 2.0).unwrap();
        assert_eq!(p.f(0.0), 0.0);
        assert!((p.f(1.0) - quad_oracle(1.0, 1.0, 2.0)).abs() < 1e-12);
        assert!((p.f(1.0) - 0.6321205588285577).abs() < 1e-12);
        assert!((p.f(5.0) - quad_oracle(5.0, 1.0, 2.0)).abs() < 1e-12);
        assert!((p.f(5.0) - 1.2706705664732254).abs() < 1e-12);
        assert!(MetricParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn semimetric_values() {
        let m = MetricParams::new(1.0, 2.0).unwrap();
        let p = SemimetricParams::new(m, 0.1, 3.0, |u: &[f64]| u[0] * u[0]).unwrap();
        assert_eq!(rho_eps(&[0.7], &[0.7], &p), 0.0);
        let expected = ((1.0 - (-1.0f64).exp()) * 1.1).sqrt();
        assert!((rho_eps(&[0.0], &[1.0], &p) - expected).abs() < 1e-12);
        let flat = SemimetricParams::new(m, 0.1, 3.0, |_: &[f64]| 0.0).unwrap();
        assert!((rho_eps(&[0.0], &[5.0], &flat) - m.f(3.0).sqrt()).abs() < 1e-15);
        assert!(SemimetricParams::new(m, 0.0, 3.0, |_: &[f64]| 0.0).is_err());
    }

    #[test]
    fn parameter_choices() {
        let p = coupling_params(1.0, 0.0, None).unwrap();
        assert_eq!((p.gamma, p.a, p.r1), (1.0, 1.0, 2.5));
        assert!(p.epsilon().is_err());
        let p = coupling_params(1.0, 2.0, None).unwrap();
        assert_eq!((p.gamma, p.a, p.r1), (0.125, 1.0, 7.5));
        let p = coupling_params(2.0, 2.0, Some(1.0)).unwrap();
        assert!((p.epsilon().unwrap() - (-2.0f64).exp() / 40.0).abs() < 1e-15);
        assert!(coupling_params(0.0, 1.0, None).is_err());
        assert!(coupling_params(1.0, 1.0, Some(-1.0)).is_err());
    }

    #[test]
    fn single_precision_metric() {
        let p = MetricParams::<f32>::new(1.0, 2.0).unwrap();
        assert!((p.f(1.0) - 0.632_120_56).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn closed_form_matches_quadrature(a in 0.05f64..5.0, r1 in 0.05f64..10.0, r in 0.0f64..20.0) {
            let p = MetricParams::new(a, r1).unwrap();
            let exact = quad_oracle(r, a, r1);
            let got = p.f(r);
            prop_assert!((got - exact).abs() <= 1e-10 * exact.max(1e-300), "{got} vs {exact}");
        }

        #[test]
        fn monotone_concave_comparable(
            a in 0.05f64..5.0, r1 in 0.05f64..10.0,
            r in prop::array::uniform3(0.0f64..20.0),
        ) {
            let mut r = r;
            r.sort_by(f64::total_cmp);
            prop_assume!(r[1] - r[0] > 1e-6 && r[2] - r[1] > 1e-6);
            let p = MetricParams::new(a, r1).unwrap();
            let f: Vec<f64> = r.iter().map(|&v| p.f(v)).collect();
            prop_assert!(f[0] <= f[1] && f[1] <= f[2]);
            let s1 = (f[1] - f[0]) / (r[1] - r[0]);
            let s2 = (f[2] - f[1]) / (r[2] - r[1]);
            prop_assert!(s2 <= s1 * (1.0 + 1e-9) + 1e-12);
            for (&ri, &fi) in r.iter().zip(&f) {
                let lower = (-a * r1).exp() * ri;
                prop_assert!(lower * (1.0 - 1e-12) <= fi && fi <= ri * (1.0 + 1e-12));
            }
        }
    }
}
