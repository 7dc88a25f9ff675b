//! Monte-Carlo estimates of one-step contraction of the coupled kernel.

use rayon::prelude::*;
use serde::Serialize;

use super::metric::{f_metric, rho_eps, MetricParams, SemimetricParams};
use super::stats::{mean_stderr, passes};
use crate::coupling::{coupled_step, CouplingConfig};
use crate::error::{invalid, Result};
use crate::kernel::KernelConfig;
use crate::rng::RandomStream;
use crate::targets::Target;
use crate::vector::distance;

/// Minimum number of coupled transitions per pair.
pub const MIN_CONTRACTION_DRAWS: usize = 1000;

pub trait PairMetric: Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
}

impl PairMetric for MetricParams<f64> {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        f_metric(distance(x, y), self)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PairMetric for SemimetricParams<f64, F> {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        rho_eps(x, y, self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionPoint {
    pub pair: usize,
    pub distance: f64,
    /// Metric at the starting pair.
    pub initial: f64,
    /// Monte-Carlo estimate of the expected metric after one coupled step.
    pub mean_after: f64,
    pub stderr: f64,
    /// `1 - mean_after / initial`; NaN when `initial = 0`.
    pub implied_rate: f64,
}

impl ContractionPoint {
    /// `E[metric'] <= (1 - c) · metric` within the Monte-Carlo allowance.
    pub fn satisfies(&self, rate_c: f64) -> bool {
        passes((1.0 - rate_c) * self.initial, self.mean_after, self.stderr)
    }
}

/// `n_mc` coupled steps from each pair; pair `i` uses stream `(seed, i)`.
pub fn empirical_contraction<M: PairMetric>(
    target: &dyn Target<f64>,
    kcfg: &KernelConfig<f64>,
    ccfg: &CouplingConfig<f64>,
    metric: &M,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<ContractionPoint>> {
    if n_mc < MIN_CONTRACTION_DRAWS {
        return invalid(format!(
            "n_mc must be at least {MIN_CONTRACTION_DRAWS}, got {n_mc}"
        ));
    }
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let mut rng = RandomStream::new(seed, i as u64);
            let mut after = Vec::with_capacity(n_mc);
            for _ in 0..n_mc {
                let s = coupled_step(target, kcfg, ccfg, x, y, &mut rng)?;
                after.push(metric.eval(&s.x, &s.y));
            }
            let (mean_after, stderr) = mean_stderr(&after);
            let initial = metric.eval(x, y);
            Ok(ContractionPoint {
                pair: i,
                distance: distance(x, y),
                initial,
                mean_after,
                stderr,
                implied_rate: if initial > 0.0 {
                    1.0 - mean_after / initial
                } else {
                    f64::NAN
                },
            })
        })
        .collect()
}
