use super::{LyapunovData, SmoothnessConstants, Target};
use crate::error::{invalid, Result};
use crate::rng::{RandomStream, SUBSTREAM_INIT};
use crate::Scalar;

/// `log Σ exp(vᵢ)` evaluated with the max shifted out.
pub fn log_sum_exp<S: Scalar>(values: &[S]) -> S {
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<S>().ln()
}

/// Writes the softmax of `values` into `weights`.
fn softmax_into<S: Scalar>(values: &[S], weights: &mut [S]) {
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    let mut total = S::zero();
    for (w, &v) in weights.iter_mut().zip(values) {
        *w = (v - max).exp();
        total = total + *w;
    }
    for w in weights.iter_mut() {
        *w = *w / total;
    }
}

/// Equal-weight mixture of `N(2σ, σ²)` and `N(-2σ, σ²)` on the line.
#[derive(Clone, Debug)]
pub struct TwoGaussianMixture1d<S> {
    sigma: S,
}

impl<S: Scalar> TwoGaussianMixture1d<S> {
    pub fn new(sigma: S) -> Result<Self> {
        if !(sigma > S::zero()) || !sigma.is_finite() {
            return invalid(format!("sigma must be positive, got {sigma}"));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }

    fn exponents(&self, x: S) -> [S; 2] {
        let two = S::lit(2.0);
        let s2 = self.sigma * self.sigma;
        let a = x - two * self.sigma;
        let b = x + two * self.sigma;
        [-(a * a) / (two * s2), -(b * b) / (two * s2)]
    }
}

impl<S: Scalar> Target<S> for TwoGaussianMixture1d<S> {
    fn name(&self) -> &str {
        "mixture2_1d"
    }

    fn dim(&self) -> usize {
        1
    }

    fn potential(&self, x: &[S]) -> S {
        -log_sum_exp(&self.exponents(x[0]))
    }

    fn gradient(&self, x: &[S], grad: &mut [S]) {
        let e = self.exponents(x[0]);
        let mut w = [S::zero(); 2];
        softmax_into(&e, &mut w);
        let two_sigma = S::lit(2.0) * self.sigma;
        let s2 = self.sigma * self.sigma;
        grad[0] = (w[0] * (x[0] - two_sigma) + w[1] * (x[0] + two_sigma)) / s2;
    }

    /// `L = 3/σ²`, `K = 2/(3σ²)`, `R = 2σ` from the curvature bound
    /// `U''(x) >= 2/(3σ²)` for `|x| > σ`; see the tests for the two-point form.
    fn constants(&self) -> Option<SmoothnessConstants<S>> {
        let s2 = self.sigma * self.sigma;
        SmoothnessConstants::new(
            S::lit(3.0) / s2,
            S::lit(2.0) / (S::lit(3.0) * s2),
            S::lit(2.0) * self.sigma,
        )
        .ok()
        .map(SmoothnessConstants::not_centered)
    }

    /// `x U'(x) >= x²/(2σ²) - 2`.
    fn lyapunov(&self) -> Option<LyapunovData<S>> {
        Some(LyapunovData::Quadratic {
            kappa: (S::lit(2.0) * self.sigma * self.sigma).recip(),
            c: S::lit(2.0),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum MixtureKind {
    Gaussian,
    /// Component energy `sqrt(|x-m|² + δ²)`.
    Laplace,
}

/// Equal-weight mixture of unit-scale components in the plane.
#[derive(Clone, Debug)]
pub struct PlanarMixture<S> {
    means: Vec<[S; 2]>,
    kind: MixtureKind,
    regularization: S,
    name: &'static str,
}

impl<S: Scalar> PlanarMixture<S> {
    pub fn new(means: Vec<[S; 2]>, kind: MixtureKind, regularization: S) -> Result<Self> {
        if means.is_empty() {
            return invalid("mixture needs at least one mean");
        }
        if kind == MixtureKind::Laplace && !(regularization > S::zero()) {
            return invalid("laplace regularization must be positive");
        }
        let name = match kind {
            MixtureKind::Gaussian => "gaussian_mixture",
            MixtureKind::Laplace => "laplace_mixture",
        };
        Ok(Self {
            means,
            kind,
            regularization,
            name,
        })
    }

    /// `count` means drawn uniformly from `[0, side]²` on the init substream of `seed`.
    pub fn random_means(count: usize, side: S, seed: u64) -> Vec<[S; 2]> {
        let mut rng = RandomStream::with_substream(seed, 0, SUBSTREAM_INIT);
        (0..count)
            .map(|_| {
                let a: S = rng.uniform();
                let b: S = rng.uniform();
                [a * side, b * side]
            })
            .collect()
    }

    pub fn means(&self) -> &[[S; 2]] {
        &self.means
    }

    pub fn kind(&self) -> MixtureKind {
        self.kind
    }

    fn max_mean_norm(&self) -> S {
        self.means
            .iter()
            .map(|m| (m[0] * m[0] + m[1] * m[1]).sqrt())
            .fold(S::zero(), S::max)
    }

    fn component_energy(&self, x: &[S], m: &[S; 2]) -> S {
        let dx = x[0] - m[0];
        let dy = x[1] - m[1];
        let r2 = dx * dx + dy * dy;
        match self.kind {
            MixtureKind::Gaussian => S::lit(0.5) * r2,
            MixtureKind::Laplace => (r2 + self.regularization * self.regularization).sqrt(),
        }
    }
}

impl<S: Scalar> Target<S> for PlanarMixture<S> {
    fn name(&self) -> &str {
        self.name
    }

    fn dim(&self) -> usize {
        2
    }

    fn potential(&self, x: &[S]) -> S {
        let neg: Vec<S> = self
            .means
            .iter()
            .map(|m| -self.component_energy(x, m))
            .collect();
        -log_sum_exp(&neg)
    }

    fn gradient(&self, x: &[S], grad: &mut [S]) {
        let energies: Vec<S> = self
            .means
            .iter()
            .map(|m| self.component_energy(x, m))
            .collect();
        let neg: Vec<S> = energies.iter().map(|&e| -e).collect();
        let mut w = vec![S::zero(); neg.len()];
        softmax_into(&neg, &mut w);
        grad[0] = S::zero();
        grad[1] = S::zero();
        for ((m, &wi), &e) in self.means.iter().zip(&w).zip(&energies) {
            let scale = match self.kind {
                MixtureKind::Gaussian => wi,
                MixtureKind::Laplace => wi / e,
            };
            grad[0] = grad[0] + scale * (x[0] - m[0]);
            grad[1] = grad[1] + scale * (x[1] - m[1]);
        }
    }

    /// Gaussian kind: `x·∇U >= |x|²/2 - max|m|²/2`.
    /// Laplace kind: `x·∇U >= |x| - (2 max|m| + δ)` and `|∇U| <= 1`.
    fn lyapunov(&self) -> Option<LyapunovData<S>> {
        let mmax = self.max_mean_norm();
        let half = S::lit(0.5);
        Some(match self.kind {
            MixtureKind::Gaussian => LyapunovData::Quadratic {
                kappa: half,
                c: half * mmax * mmax,
            },
            MixtureKind::Laplace => LyapunovData::Exponential {
                kappa: S::one(),
                c: S::lit(2.0) * mmax + self.regularization,
                q: S::one(),
            },
        })
    }
}
