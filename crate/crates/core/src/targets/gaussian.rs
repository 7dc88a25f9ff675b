use super::{LyapunovData, SmoothnessConstants, Target};
use crate::error::{invalid, Result};
use crate::Scalar;

/// Centered Gaussian with diagonal covariance: `U(x) = ½ xᵀΣ⁻¹x`.
#[derive(Clone, Debug)]
pub struct Gaussian<S> {
    variances: Vec<S>,
    precisions: Vec<S>,
}

impl<S: Scalar> Gaussian<S> {
    pub fn new(covariance_diagonal: &[S]) -> Result<Self> {
        if covariance_diagonal.is_empty() {
            return invalid("covariance diagonal must be nonempty");
        }
        if let Some(bad) = covariance_diagonal
            .iter()
            .find(|v| !(**v > S::zero()) || !v.is_finite())
        {
            return invalid(format!("variances must be positive and finite, got {bad}"));
        }
        Ok(Self {
            variances: covariance_diagonal.to_vec(),
            precisions: covariance_diagonal.iter().map(|v| v.recip()).collect(),
        })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        Self::new(&vec![S::one(); dim])
    }

    pub fn variances(&self) -> &[S] {
        &self.variances
    }

    fn extreme_variances(&self) -> (S, S) {
        self.variances
            .iter()
            .fold((S::infinity(), S::zero()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

impl<S: Scalar> Target<S> for Gaussian<S> {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn dim(&self) -> usize {
        self.variances.len()
    }

    fn potential(&self, x: &[S]) -> S {
        let half = S::lit(0.5);
        x.iter()
            .zip(&self.precisions)
            .map(|(&xi, &p)| half * p * xi * xi)
            .sum()
    }

    fn gradient(&self, x: &[S], grad: &mut [S]) {
        for ((g, &xi), &p) in grad.iter_mut().zip(x).zip(&self.precisions) {
            *g = p * xi;
        }
    }

    fn constants(&self) -> Option<SmoothnessConstants<S>> {
        let (var_min, var_max) = self.extreme_variances();
        SmoothnessConstants::new(var_min.recip(), var_max.recip(), S::zero()).ok()
    }

    fn lyapunov(&self) -> Option<LyapunovData<S>> {
        let (_, var_max) = self.extreme_variances();
        Some(LyapunovData::Quadratic {
            kappa: var_max.recip(),
            c: S::zero(),
        })
    }

    fn diagonal_precision(&self) -> Option<&[S]> {
        Some(&self.precisions)
    }
}

/// `U ≡ 0`: free flight, used as a degenerate reference.
#[derive(Clone, Debug)]
pub struct FreeParticle {
    dim: usize,
}

impl FreeParticle {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { dim })
    }
}

impl<S: Scalar> Target<S> for FreeParticle {
    fn name(&self) -> &str {
        "free_particle"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, _x: &[S]) -> S {
        S::zero()
    }

    fn gradient(&self, _x: &[S], grad: &mut [S]) {
        grad.fill(S::zero());
    }
}
