//! Monte-Carlo verification of one-step Lyapunov drift inequalities
//! `(πΨ)(x) <= bound(Ψ(x))` for the HMC kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean_stderr, passes};
use crate::error::{invalid, Result};
use crate::kernel::{hmc_step, KernelConfig};
use crate::rng::RandomStream;
use crate::targets::{LyapunovData, Target};
use crate::vector::norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovKind {
    /// `Ψ = |x|²` against `(1 - κT²/8)Ψ + (C + 2d)T²`.
    Quadratic,
    /// `Ψ = exp(δ|x|)` (smoothed near 0) against `Ψ + δκT²(5 - Ψ/7)`.
    Exponential,
    /// `φ = |x| + 2T√d` against `2φ`, and `ψ = exp(U^{2/3})` against `λψ`.
    PaperPsi,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftPoint {
    pub point: usize,
    pub function: &'static str,
    pub x: Vec<f64>,
    pub psi_x: f64,
    /// Monte-Carlo estimate of `(πΨ)(x)`.
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub satisfied: bool,
}

pub fn quadratic_bound(kappa: f64, c: f64, dim: usize, duration: f64, psi: f64) -> f64 {
    let t2 = duration * duration;
    (1.0 - kappa * t2 / 8.0) * psi + (c + 2.0 * dim as f64) * t2
}

/// `δ = κ / (4C + 8d + Q²T²)`.
pub fn exponential_delta(kappa: f64, c: f64, q: f64, dim: usize, duration: f64) -> f64 {
    kappa / (4.0 * c + 8.0 * dim as f64 + q * q * duration * duration)
}

/// `exp(δ|x|)` for `|x| >= 1/δ`, and `exp((1 + δ²|x|²)/2)` inside, which
/// matches value and slope at `|x| = 1/δ`.
pub fn exponential_psi(x: &[f64], delta: f64) -> f64 {
    let s = delta * norm(x);
    if s >= 1.0 {
        s.exp()
    } else {
        (0.5 * (1.0 + s * s)).exp()
    }
}

pub fn exponential_bound(kappa: f64, delta: f64, duration: f64, psi: f64) -> f64 {
    psi + delta * kappa * duration * duration * (5.0 - psi / 7.0)
}

pub fn drift_phi(x: &[f64], duration: f64) -> f64 {
    norm(x) + 2.0 * duration * (x.len() as f64).sqrt()
}

pub fn drift_psi(potential: f64) -> f64 {
    potential.max(0.0).powf(2.0 / 3.0).exp()
}

/// `λ = E[exp(|ξ|^{4/3} + |ξ|²/3 + 1)]` for `ξ ~ N(0, I_d)`, by quadrature
/// against the chi distribution.
pub fn drift_lambda(dim: usize) -> f64 {
    let d = dim as f64;
    let norm_const = ((0.5 * d - 1.0) * std::f64::consts::LN_2 + libm::lgamma(0.5 * d)).exp();
    let integrand = |r: f64| {
        r.powi(dim as i32 - 1) * (r.powf(4.0 / 3.0) + r * r / 3.0 + 1.0 - 0.5 * r * r).exp()
    };
    let upper = 40.0 + 4.0 * d.sqrt();
    let n = 40_000;
    let h = upper / n as f64;
    let mut acc = integrand(0.0) + integrand(upper);
    for i in 1..n {
        acc += integrand(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0 / norm_const
}

enum Plan {
    Quadratic { kappa: f64, c: f64 },
    Exponential { kappa: f64, delta: f64 },
    Paper { lambda: f64 },
}

/// For each grid point, `n_mc` independent HMC transitions on stream
/// `(seed, point index)`.
pub fn lyapunov_drift_check(
    target: &dyn Target<f64>,
    cfg: &KernelConfig<f64>,
    kind: LyapunovKind,
    grid: &[Vec<f64>],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<DriftPoint>> {
    if n_mc < 2 {
        return invalid("n_mc must be at least 2");
    }
    let dim = target.dim();
    if let Some(bad) = grid.iter().find(|x| x.len() != dim) {
        return invalid(format!(
            "grid point of dimension {} for a target of dimension {dim}",
            bad.len()
        ));
    }
    let t = cfg.duration;
    let plan = match (kind, target.lyapunov()) {
        (LyapunovKind::Quadratic, Some(LyapunovData::Quadratic { kappa, c })) => {
            Plan::Quadratic { kappa, c }
        }
        (LyapunovKind::Exponential, Some(LyapunovData::Exponential { kappa, c, q })) => {
            Plan::Exponential {
                kappa,
                delta: exponential_delta(kappa, c, q, dim, t),
            }
        }
        (LyapunovKind::PaperPsi, _) => Plan::Paper {
            lambda: drift_lambda(dim),
        },
        (k, data) => {
            return invalid(format!(
                "target {} has no {k:?} Lyapunov data (declared: {data:?})",
                target.name()
            ))
        }
    };
    let per_point: Vec<Vec<DriftPoint>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<Vec<DriftPoint>> {
            let mut rng = RandomStream::new(seed, i as u64);
            let mut ends = Vec::with_capacity(n_mc);
            for _ in 0..n_mc {
                ends.push(hmc_step(target, cfg, x, &mut rng)?.next_position);
            }
            let row = |function, psi: &dyn Fn(&[f64]) -> f64, bound: &dyn Fn(f64) -> f64| {
                let values: Vec<f64> = ends.iter().map(|e| psi(e)).collect();
                let (estimate, stderr) = mean_stderr(&values);
                let psi_x = psi(x);
                let b = bound(psi_x);
                DriftPoint {
                    point: i,
                    function,
                    x: x.clone(),
                    psi_x,
                    estimate,
                    stderr,
                    bound: b,
                    satisfied: passes(b, estimate, stderr),
                }
            };
            Ok(match plan {
                Plan::Quadratic { kappa, c } => {
                    vec![row("psi", &|v| v.iter().map(|a| a * a).sum(), &|p| {
                        quadratic_bound(kappa, c, dim, t, p)
                    })]
                }
                Plan::Exponential { kappa, delta } => {
                    vec![row("psi", &|v| exponential_psi(v, delta), &|p| {
                        exponential_bound(kappa, delta, t, p)
                    })]
                }
                Plan::Paper { lambda } => vec![
                    row("phi", &|v| drift_phi(v, t), &|p| 2.0 * p),
                    row("psi", &|v| drift_psi(target.potential(v)), &|p| lambda * p),
                ],
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{Gaussian, Rosenbrock};

    #[test]
    fn smoothed_exponential_is_c1() {
        let delta = 0.2;
        let edge = 1.0 / delta;
        let (lo, hi) = (edge - 1e-7, edge + 1e-7);
        let v_lo = exponential_psi(&[lo], delta);
        let v_hi = exponential_psi(&[hi], delta);
        assert!((v_lo - 1f64.exp()).abs() < 1e-6 && (v_hi - 1f64.exp()).abs() < 1e-6);
        let slope = |a: f64| {
            (exponential_psi(&[a + 1e-6], delta) - exponential_psi(&[a - 1e-6], delta)) / 2e-6
        };
        assert!((slope(edge - 1e-4) - slope(edge + 1e-4)).abs() < 1e-3);
        assert!(exponential_psi(&[0.0], delta) >= 1.0);
    }

    #[test]
    fn lambda_matches_direct_quadrature() {
        // d = 1: integrate against the normal density on the line
        let n = 200_000;
        let (lo, hi) = (-40.0f64, 40.0f64);
        let h = (hi - lo) / n as f64;
        let direct: f64 = (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (x.abs().powf(4.0 / 3.0) + x * x / 3.0 + 1.0 - 0.5 * x * x).exp()
            })
            .sum::<f64>()
            * h
            / (2.0 * std::f64::consts::PI).sqrt();
        assert!(
            (drift_lambda(1) / direct - 1.0).abs() < 1e-6,
            "{} vs {direct}",
            drift_lambda(1)
        );
        // d = 2: product grid
        let m = 1200;
        let (lo, hi) = (-30.0f64, 30.0f64);
        let h = (hi - lo) / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let (a, b) = (lo + i as f64 * h, lo + j as f64 * h);
                let r2 = a * a + b * b;
                acc += (r2.powf(2.0 / 3.0) + r2 / 3.0 + 1.0 - 0.5 * r2).exp();
            }
        }
        let direct2 = acc * h * h / (2.0 * std::f64::consts::PI);
        assert!(
            (drift_lambda(2) / direct2 - 1.0).abs() < 1e-4,
            "{} vs {direct2}",
            drift_lambda(2)
        );
    }

    #[test]
    fn quadratic_drift_standard_gaussian_exact() {
        let g = Gaussian::<f64>::standard(2).unwrap();
        let cfg = KernelConfig::exact(0.4).unwrap();
        let grid = vec![vec![0.0, 0.0], vec![3.0, 0.0]];
        let pts =
            lyapunov_drift_check(&g, &cfg, LyapunovKind::Quadratic, &grid, 100_000, 1).unwrap();
        assert!(pts.iter().all(|p| p.satisfied), "{pts:?}");
        assert!((pts[0].bound - 4.0 * 0.16).abs() < 1e-12);
        assert!((pts[1].bound - (0.98 * 9.0 + 0.64)).abs() < 1e-12);
    }

    #[test]
    fn growth_functions_on_gaussian() {
        let g = Gaussian::<f64>::standard(1).unwrap();
        let cfg = KernelConfig::unadjusted(0.5, 0.05).unwrap();
        let grid = vec![vec![0.5], vec![2.0]];
        let pts = lyapunov_drift_check(&g, &cfg, LyapunovKind::PaperPsi, &grid, 20_000, 2).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.satisfied), "{pts:?}");
    }

    #[test]
    fn missing_data_is_rejected() {
        let cfg = KernelConfig::adjusted(0.5, 0.05).unwrap();
        let err = lyapunov_drift_check(
            &Rosenbrock,
            &cfg,
            LyapunovKind::Quadratic,
            &[vec![0.0, 0.0]],
            10,
            0,
        );
        assert!(err.is_err());
        let g = Gaussian::<f64>::standard(1).unwrap();
        let err = lyapunov_drift_check(&g, &cfg, LyapunovKind::Exponential, &[vec![0.0]], 10, 0);
        assert!(err.is_err());
    }
}
