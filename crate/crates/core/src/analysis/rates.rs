//! Condition checkers and explicit contraction-rate and mixing-time formulas.

use serde::{Deserialize, Serialize};

use super::metric::coupling_params;
use crate::error::{invalid, Result};
use crate::targets::SmoothnessConstants;
use crate::Scalar;

/// Relative rounding allowance when comparing a condition with its bound.
pub const CONDITION_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// `LT² <= K/L`, synchronous coupling of exact HMC for convex `U`.
    ConvexExact,
    /// `LT(T+h₁) <= K/L`, the same for Verlet HMC.
    ConvexNumerical,
    /// `LT² <= min(K/L, 1/4, 1/(256LR²))`.
    Exact,
    /// `L(T+h₁)² <= min(K/L, 1/4, 1/(16Λ))`, `Λ = 16LR²`.
    Numerical,
    /// `L(T+h₁)² <= min(1/4, 1/(16Λ))`.
    Lyapunov,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    pub lhs: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Name of the smallest entry of the bound.
    pub binding: String,
    /// Human-readable statement of the violated inequality, if any.
    pub violated: Option<String>,
}

pub fn check_conditions<S: Scalar>(
    c: &SmoothnessConstants<S>,
    duration: S,
    h1: S,
    kind: ConditionKind,
) -> ConditionReport {
    let l = c.lipschitz_grad.as_f64();
    let k = c.convexity.as_f64();
    let r = c.convexity_radius.as_f64();
    let t = duration.as_f64();
    let h1 = h1.as_f64();
    let inv_or_inf = |v: f64| if v > 0.0 { 1.0 / v } else { f64::INFINITY };
    let big_lambda = 16.0 * l * r * r;
    let (lhs, lhs_name, entries): (f64, &str, Vec<(&str, f64)>) = match kind {
        ConditionKind::ConvexExact => (l * t * t, "L T^2", vec![("K/L", k / l)]),
        ConditionKind::ConvexNumerical => (l * t * (t + h1), "L T (T+h1)", vec![("K/L", k / l)]),
        ConditionKind::Exact => (
            l * t * t,
            "L T^2",
            vec![
                ("K/L", k / l),
                ("1/4", 0.25),
                ("1/(256 L R^2)", inv_or_inf(256.0 * l * r * r)),
            ],
        ),
        ConditionKind::Numerical => (
            l * (t + h1).powi(2),
            "L (T+h1)^2",
            vec![
                ("K/L", k / l),
                ("1/4", 0.25),
                ("1/(16 Lambda)", inv_or_inf(16.0 * big_lambda)),
            ],
        ),
        ConditionKind::Lyapunov => (
            l * (t + h1).powi(2),
            "L (T+h1)^2",
            vec![
                ("1/4", 0.25),
                ("1/(16 Lambda)", inv_or_inf(16.0 * big_lambda)),
            ],
        ),
    };
    let (binding, bound) =
        entries.iter().copied().fold(
            ("", f64::INFINITY),
            |acc, e| if e.1 < acc.1 { e } else { acc },
        );
    let satisfied = lhs <= bound * (1.0 + CONDITION_RTOL);
    ConditionReport {
        kind,
        lhs,
        bound,
        satisfied,
        binding: binding.to_string(),
        violated: (!satisfied).then(|| format!("{lhs_name} = {lhs} > {binding} = {bound}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime")]
pub enum RateRegime {
    ConvexExact,
    ConvexNumerical,
    General,
    Lyapunov { lambda: f64 },
}

impl RateRegime {
    /// The condition under which the rate is guaranteed.
    pub fn condition(self, numerical: bool) -> ConditionKind {
        match self {
            RateRegime::ConvexExact => ConditionKind::ConvexExact,
            RateRegime::ConvexNumerical => ConditionKind::ConvexNumerical,
            RateRegime::General if numerical => ConditionKind::Numerical,
            RateRegime::General => ConditionKind::Exact,
            RateRegime::Lyapunov { .. } => ConditionKind::Lyapunov,
        }
    }
}

pub fn contraction_rate<S: Scalar>(
    c: &SmoothnessConstants<S>,
    duration: S,
    regime: RateRegime,
) -> S {
    let k = c.convexity;
    let r = c.convexity_radius;
    let t = duration;
    let kt2 = k * t * t;
    match regime {
        RateRegime::ConvexExact => S::lit(0.5) * kt2,
        RateRegime::ConvexNumerical => S::lit(0.25) * kt2,
        RateRegime::General => {
            let inner = S::lit(0.5) * kt2 * (S::one() + r / t) * (-r / (S::lit(2.0) * t)).exp();
            S::lit(0.1) * inner.min(S::one()) * (-S::lit(2.0) * r / t).exp()
        }
        RateRegime::Lyapunov { lambda } => {
            (S::lit(10.0 * lambda)).min((-S::lit(2.0) * r / t).exp()) / S::lit(80.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingVariant {
    /// `log(Δ₀/ε)`, negative values allowed.
    Exact,
    /// `log⁺(2Δ₀/ε)`.
    Numerical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingBound {
    pub prefactor_m: f64,
    pub n: u64,
}

/// `M = exp(5(1+R/T)/2)` and the smallest `n` with `Δ(n) <= ε`.
pub fn mixing_time_bound<S: Scalar>(
    rate_c: S,
    radius: S,
    duration: S,
    delta0: S,
    eps: S,
    variant: MixingVariant,
) -> Result<MixingBound> {
    let (c, r, t, d0, e) = (
        rate_c.as_f64(),
        radius.as_f64(),
        duration.as_f64(),
        delta0.as_f64(),
        eps.as_f64(),
    );
    if !(c > 0.0) || !(t > 0.0) || !(d0 > 0.0) || !(e > 0.0) || !(r >= 0.0) {
        return invalid(format!(
            "mixing bound needs positive c, T, Δ0, ε and nonnegative R; got c={c}, R={r}, T={t}, Δ0={d0}, ε={e}"
        ));
    }
    let log_term = match variant {
        MixingVariant::Exact => (d0 / e).ln(),
        MixingVariant::Numerical => (2.0 * d0 / e).ln().max(0.0),
    };
    let raw = (2.5 + 2.5 * r / t + log_term) / c;
    Ok(MixingBound {
        prefactor_m: (2.5 * (1.0 + r / t)).exp(),
        n: raw.max(0.0).ceil() as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub target: String,
    pub duration: f64,
    pub h1: f64,
    pub lipschitz_grad: f64,
    pub convexity: f64,
    pub convexity_radius: f64,
    pub constants_estimated: bool,
    pub regime: RateRegime,
    pub condition: ConditionReport,
    /// Whether the rate below is backed by the condition.
    pub guaranteed: bool,
    pub gamma: f64,
    pub a: f64,
    pub r1: f64,
    pub epsilon: Option<f64>,
    pub rate_c: f64,
    pub prefactor_m: f64,
    pub n_bound: u64,
    pub delta0: f64,
    pub eps: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn rate_report<S: Scalar>(
    target: &str,
    c: &SmoothnessConstants<S>,
    duration: S,
    h1: S,
    regime: RateRegime,
    alpha: Option<S>,
    delta0: S,
    eps: S,
) -> Result<RateReport> {
    let numerical = h1 > S::zero();
    let condition = check_conditions(c, duration, h1, regime.condition(numerical));
    let params = coupling_params(duration, c.convexity_radius, alpha)?;
    let rate = contraction_rate(c, duration, regime);
    let variant = if numerical {
        MixingVariant::Numerical
    } else {
        MixingVariant::Exact
    };
    let mix = mixing_time_bound(rate, c.convexity_radius, duration, delta0, eps, variant)?;
    Ok(RateReport {
        target: target.to_string(),
        duration: duration.as_f64(),
        h1: h1.as_f64(),
        lipschitz_grad: c.lipschitz_grad.as_f64(),
        convexity: c.convexity.as_f64(),
        convexity_radius: c.convexity_radius.as_f64(),
        constants_estimated: c.estimated,
        regime,
        guaranteed: condition.satisfied && !c.estimated,
        condition,
        gamma: params.gamma.as_f64(),
        a: params.a.as_f64(),
        r1: params.r1.as_f64(),
        epsilon: params.epsilon.map(|e| e.as_f64()),
        rate_c: rate.as_f64(),
        prefactor_m: mix.prefactor_m,
        n_bound: mix.n,
        delta0: delta0.as_f64(),
        eps: eps.as_f64(),
    })
}
